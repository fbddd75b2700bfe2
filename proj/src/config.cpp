#include "dynspace/config.hpp"

#include "dynspace/error.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace dynspace {

namespace {

constexpr const char* kRequired = "\x01";

// key -> default; kRequired marks keys without a default
const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> table = {
        {"corpus", kRequired},
        {"output_dir", kRequired},
        {"start_year", kRequired},
        {"end_year", kRequired},
        {"window_len", "5"},
        {"field.doc_id", "doc_id"},
        {"field.year", "year"},
        {"field.text", "text"},
        {"field.creators", "creators"},
        {"field.categories", "categories"},
        {"field.outcome", "outcome"},
        {"field.split", "split"},
        {"normalize.lowercase", "true"},
        {"normalize.strip_punctuation", "true"},
        {"normalize.min_length", "2"},
        {"min_freq", "150"},
        {"cooc_window", "5"},
        {"ppmi_shift", "0"},
        {"k", "50"},
        {"iterations", "10"},
        {"lambda", "10"},
        {"tau", "50"},
        {"train_seed", "1"},
        {"init_scale", "auto"},
        {"lookback", "1"},
        {"flow_m", "5000"},
        {"flow_t1", "30"},
        {"flow_t2", "12"},
        {"flow_seed", "1"},
        {"flow_sampling", "box"},
        {"flow_mode", "pooled"},
        {"flow_grid", "false"},
        {"flow_min_cluster_input", "10"},
        {"flow_bandwidth_percentile", "2"},
        {"adopt_sample_n", "20000"},
        {"adopt_candidates", "500"},
        {"adopt_seed", "1"},
        {"adopt_demean", "false"},
    };
    return table;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw Error(ErrorKind::Config, "key '" + key + "': expected " + expected + ", got '" + value + "'");
}

template <typename Int>
Int as_int(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto& v = kv.at(key);
    Int out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

double as_double(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto& v = kv.at(key);
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) bad_value(key, v, "a number");
        return d;
    } catch (const std::logic_error&) {
        bad_value(key, v, "a number");
    }
}

bool as_bool(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto& v = kv.at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(key, v, "true or false");
}

void assign(std::map<std::string, std::string>& kv, const std::string& line, const std::string& where) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!defaults().count(key)) throw Error(ErrorKind::Config, "unknown key '" + key + "'");
    kv[key] = value;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative()) path = base / path;
    return path.lexically_normal();
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir,
                            const std::vector<std::string>& overrides) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        assign(kv, line, "line " + std::to_string(lineno));
    }
    for (const auto& o : overrides) assign(kv, o, "override '" + o + "'");

    for (const auto& [key, def] : defaults()) {
        if (kv.count(key)) continue;
        if (def == kRequired) throw Error(ErrorKind::Config, "missing required key '" + key + "'");
        kv[key] = def;
    }

    PipelineConfig c;
    {
        std::string paths = kv.at("corpus");
        std::string resolved_list;
        std::size_t start = 0;
        while (start <= paths.size()) {
            const auto comma = paths.find(',', start);
            const std::string item = trim(std::string_view(paths).substr(start, comma - start));
            if (!item.empty()) {
                c.corpus.push_back(resolve(base_dir, item));
                if (!resolved_list.empty()) resolved_list += ',';
                resolved_list += c.corpus.back().string();
            }
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (c.corpus.empty()) throw Error(ErrorKind::Config, "missing required key 'corpus'");
        kv["corpus"] = resolved_list;
    }
    if (kv.at("output_dir").empty()) throw Error(ErrorKind::Config, "missing required key 'output_dir'");
    c.output_dir = resolve(base_dir, kv.at("output_dir"));
    kv["output_dir"] = c.output_dir.string();

    c.start_year = as_int<int>(kv, "start_year");
    c.end_year = as_int<int>(kv, "end_year");
    c.window_len = as_int<int>(kv, "window_len");
    if (c.end_year < c.start_year) throw Error(ErrorKind::Config, "end_year precedes start_year");
    if (c.window_len < 1) throw Error(ErrorKind::Config, "window_len must be >= 1");

    c.fields.doc_id = kv.at("field.doc_id");
    c.fields.year = kv.at("field.year");
    c.fields.text = kv.at("field.text");
    c.fields.creators = kv.at("field.creators");
    c.fields.categories = kv.at("field.categories");
    c.fields.outcome = kv.at("field.outcome");
    c.fields.split = kv.at("field.split");

    c.normalization.lowercase = as_bool(kv, "normalize.lowercase");
    c.normalization.strip_punctuation = as_bool(kv, "normalize.strip_punctuation");
    c.normalization.min_length = as_int<std::size_t>(kv, "normalize.min_length");

    c.min_freq = as_int<std::uint64_t>(kv, "min_freq");
    c.cooc_window = as_int<std::size_t>(kv, "cooc_window");
    if (c.cooc_window < 1) throw Error(ErrorKind::Config, "cooc_window must be >= 1");
    c.ppmi_shift = as_double(kv, "ppmi_shift");

    c.train.k = as_int<std::size_t>(kv, "k");
    c.train.iterations = as_int<std::size_t>(kv, "iterations");
    c.train.lambda = as_double(kv, "lambda");
    c.train.tau = as_double(kv, "tau");
    c.train.seed = as_int<std::uint64_t>(kv, "train_seed");
    if (kv.at("init_scale") != "auto") c.train.init_scale = as_double(kv, "init_scale");
    try {
        c.train.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    c.lookback = as_int<std::size_t>(kv, "lookback");
    if (c.lookback < 1) throw Error(ErrorKind::Config, "lookback must be >= 1");

    c.flow.m = as_int<std::size_t>(kv, "flow_m");
    c.flow.t1_percent = as_double(kv, "flow_t1");
    c.flow.t2_percent = as_double(kv, "flow_t2");
    c.flow.seed = as_int<std::uint64_t>(kv, "flow_seed");
    const auto& sampling = kv.at("flow_sampling");
    if (sampling == "box") c.flow.sampling = FocalSampling::BoundingBox;
    else if (sampling == "words") c.flow.sampling = FocalSampling::WordPositions;
    else bad_value("flow_sampling", sampling, "box or words");
    const auto& mode = kv.at("flow_mode");
    if (mode == "pooled") c.flow.mode = FlowMode::PooledPairs;
    else if (mode == "final") c.flow.mode = FlowMode::FinalSlice;
    else bad_value("flow_mode", mode, "pooled or final");
    c.flow.inflow.t1_percent = c.flow.t1_percent;
    c.flow.inflow.min_cluster_input = as_int<std::size_t>(kv, "flow_min_cluster_input");
    c.flow.inflow.clustering.bandwidth_percentile = as_double(kv, "flow_bandwidth_percentile");
    c.flow_grid = as_bool(kv, "flow_grid");
    if (c.flow.m < 1) throw Error(ErrorKind::Config, "flow_m must be >= 1");
    if (!(c.flow.t1_percent > 0.0 && c.flow.t1_percent <= 100.0)) throw Error(ErrorKind::Config, "flow_t1 outside (0, 100]");
    if (!(c.flow.t2_percent >= 0.0 && c.flow.t2_percent <= 100.0)) throw Error(ErrorKind::Config, "flow_t2 outside [0, 100]");

    c.adoption.sample_n = as_int<std::size_t>(kv, "adopt_sample_n");
    c.adoption.candidates = as_int<std::size_t>(kv, "adopt_candidates");
    c.adoption.seed = as_int<std::uint64_t>(kv, "adopt_seed");
    c.adopt_demean = as_bool(kv, "adopt_demean");

    c.resolved = std::move(kv);
    return c;
}

PipelineConfig validate_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    PipelineConfig c = parse_config(buf.str(), std::filesystem::absolute(base), overrides);
    for (const auto& p : c.corpus) {
        if (!std::filesystem::is_regular_file(p)) throw Error(ErrorKind::Config, "corpus file does not exist: " + p.string());
    }
    return c;
}

std::string render_config(const PipelineConfig& config, const std::vector<std::string>& keys) {
    std::string out;
    if (keys.empty()) {
        for (const auto& [k, v] : config.resolved) out += k + '=' + v + '\n';
        return out;
    }
    std::set<std::string> sorted(keys.begin(), keys.end());
    for (const auto& k : sorted) out += k + '=' + config.resolved.at(k) + '\n';
    return out;
}

}  // namespace dynspace
