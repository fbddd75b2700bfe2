#include "dynspace/checksum.hpp"
#include "dynspace/config.hpp"
#include "dynspace/dynembed.hpp"
#include "dynspace/error.hpp"
#include "dynspace/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dynspace;

namespace {

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

int fail(std::string_view category, std::string_view stage, const std::string& message) {
    std::cerr << "error: " << category << ": " << stage << ": " << one_line(message) << '\n';
    return 1;
}

void inspect_tensor(const fs::path& path) {
    const auto h = read_tensor_header(path);
    std::cout << "format\tDYNE\n"
              << "version\t" << h.version << '\n'
              << "T\t" << h.T << '\n'
              << "n\t" << h.n << '\n'
              << "k\t" << h.k << '\n'
              << "vocab_fingerprint\t" << to_hex(h.fingerprint) << '\n';
}

void inspect_manifest(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto m = RunManifest::from_json(buf.str());
    std::cout << "toolkit_version\t" << m.toolkit_version << '\n' << "config_checksum\t" << m.config_checksum << '\n';
    for (const auto& s : m.stages) {
        std::cout << "stage\t" << s.name << '\t' << s.outputs.size() << " outputs\t" << s.seconds << "s\n";
    }
}

// Header line plus record count for line-oriented reports.
void inspect_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::string first, line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (n++ == 0) first = line;
    }
    const auto ext = path.extension().string();
    // vocab.tsv starts directly with numbered rows
    const auto lead = first.substr(0, first.find('\t'));
    const bool numbered = !lead.empty() && std::all_of(lead.begin(), lead.end(), [](unsigned char c) { return std::isdigit(c); });
    const bool has_header = ext == ".csv" || ext == ".txt" || (ext == ".tsv" && !numbered);
    std::cout << "file\t" << path.filename().string() << '\n';
    std::cout << (has_header ? "header\t" : "first\t") << first << '\n';
    std::cout << "records\t" << (has_header && n > 0 ? n - 1 : n) << '\n';
}

void inspect(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw Error(ErrorKind::Io, "no such file: " + path.string());
    if (path.extension() == ".dyne") {
        inspect_tensor(path);
    } else if (path.filename() == "manifest.json") {
        inspect_manifest(path);
    } else {
        inspect_lines(path);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic embedding and innovation geometry toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::vector<std::pair<CLI::App*, std::optional<Stage>>> pipeline_cmds;

    auto add_pipeline = [&](const std::string& name, const std::string& help, std::optional<Stage> stage) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--config", config_path, "Configuration file")->required();
        cmd->add_option("--set", overrides, "Override a configuration key (key=value)");
        pipeline_cmds.emplace_back(cmd, stage);
    };
    add_pipeline("ingest", "Normalize the corpus", Stage::Ingest);
    add_pipeline("vocab", "Build the vocabulary", Stage::Vocab);
    add_pipeline("cooc", "Count co-occurrences and build PPMI targets", Stage::Cooc);
    add_pipeline("train", "Train the dynamic embedding", Stage::Train);
    add_pipeline("project", "Write document and creator vectors", Stage::Project);
    add_pipeline("diversity", "Team diversity report", Stage::Diversity);
    add_pipeline("taxonomy", "Integration and speculation report", Stage::Taxonomy);
    add_pipeline("flow", "In-flow versus innovation counts", Stage::Flow);
    add_pipeline("adopt", "Concept adoption table and fit", Stage::Adopt);
    add_pipeline("run", "Full pipeline", std::nullopt);

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print the header of a tensor or report file");
    inspect_cmd->add_option("--file", inspect_path, "Artifact to inspect")->required();

    CLI11_PARSE(app, argc, argv);

    if (*inspect_cmd) {
        try {
            inspect(inspect_path);
        } catch (const Error& e) {
            return fail(to_string(e.kind()), "inspect", e.what());
        } catch (const std::exception& e) {
            return fail("internal", "inspect", e.what());
        }
        return 0;
    }

    for (const auto& [cmd, stage] : pipeline_cmds) {
        if (!*cmd) continue;
        PipelineConfig config;
        try {
            config = validate_config(config_path, overrides);
        } catch (const Error& e) {
            return fail(to_string(e.kind()), "config", e.what());
        }
        try {
            const auto result = run_pipeline(config, stage);
            for (Stage st : kAllStages) {
                const std::string name(to_string(st));
                if (std::find(result.executed.begin(), result.executed.end(), name) != result.executed.end()) {
                    std::cout << name << "\tran\n";
                } else if (std::find(result.skipped.begin(), result.skipped.end(), name) != result.skipped.end()) {
                    std::cout << name << "\tskipped\n";
                }
            }
            std::cout << "output\t" << config.output_dir.string() << '\n';
        } catch (const StageError& e) {
            return fail(to_string(e.kind()), e.stage(), e.what());
        } catch (const Error& e) {
            return fail(to_string(e.kind()), "run", e.what());
        } catch (const std::exception& e) {
            return fail("internal", "run", e.what());
        }
        return 0;
    }
    return 0;
}
