#include "dynspace/pipeline.hpp"

#include "dynspace/adoption.hpp"
#include "dynspace/checksum.hpp"
#include "dynspace/cooccurrence.hpp"
#include "dynspace/corpus.hpp"
#include "dynspace/dynembed.hpp"
#include "dynspace/flow.hpp"
#include "dynspace/geometry.hpp"
#include "dynspace/taxonomy.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace dynspace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kLockFile = ".dynspace.lock";

const std::vector<std::string> kSliceKeys = {"start_year", "end_year", "window_len"};

std::vector<std::string> stage_keys(Stage s) {
    std::vector<std::string> keys;
    auto add = [&](std::initializer_list<const char*> ks) { keys.insert(keys.end(), ks.begin(), ks.end()); };
    switch (s) {
        case Stage::Ingest:
            add({"field.doc_id", "field.year", "field.text", "field.creators", "field.categories", "field.outcome",
                 "field.split", "normalize.lowercase", "normalize.strip_punctuation", "normalize.min_length"});
            break;
        case Stage::Vocab: add({"min_freq"}); break;
        case Stage::Cooc: add({"cooc_window", "ppmi_shift"}); break;
        case Stage::Train: add({"k", "iterations", "lambda", "tau", "train_seed", "init_scale"}); break;
        case Stage::Project: add({"lookback"}); break;
        case Stage::Taxonomy: add({"lookback"}); break;
        case Stage::Diversity: add({"lookback"}); break;
        case Stage::Flow:
            add({"flow_m", "flow_t1", "flow_t2", "flow_seed", "flow_sampling", "flow_mode", "flow_grid",
                 "flow_min_cluster_input", "flow_bandwidth_percentile"});
            break;
        case Stage::Adopt: add({"adopt_sample_n", "adopt_candidates", "adopt_seed", "adopt_demean"}); break;
    }
    // slicing shapes every stage from cooc on
    if (s != Stage::Ingest && s != Stage::Vocab) keys.insert(keys.end(), kSliceKeys.begin(), kSliceKeys.end());
    return keys;
}

std::vector<Stage> direct_deps(Stage s) {
    switch (s) {
        case Stage::Ingest: return {};
        case Stage::Vocab: return {Stage::Ingest};
        case Stage::Cooc: return {Stage::Ingest, Stage::Vocab};
        case Stage::Train: return {Stage::Vocab, Stage::Cooc};
        case Stage::Project: return {Stage::Ingest, Stage::Vocab, Stage::Train};
        case Stage::Taxonomy: return {Stage::Ingest, Stage::Vocab};
        case Stage::Diversity: return {Stage::Ingest, Stage::Vocab, Stage::Train, Stage::Taxonomy};
        case Stage::Flow: return {Stage::Ingest, Stage::Vocab, Stage::Train};
        case Stage::Adopt: return {Stage::Ingest, Stage::Vocab, Stage::Train};
    }
    return {};
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

void write_file(const fs::path& path, const std::string& contents) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

template <typename T>
ojson opt(const std::optional<T>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

std::string ppmi_name(std::size_t t) { return "ppmi_" + std::to_string(t) + ".txt"; }

class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / kLockFile) {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw Error(ErrorKind::Locked, "output directory in use by another run (remove " + path_.string() +
                                               " if stale)");
        }
    }
    ~DirLock() {
        ::close(fd_);
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

// Lazily reloads artifacts from disk so warm and cold runs see the same inputs.
class Workspace {
public:
    Workspace(const PipelineConfig& cfg) : cfg_(cfg), dir_(cfg.output_dir) {}

    const fs::path& dir() const { return dir_; }
    const PipelineConfig& cfg() const { return cfg_; }

    const Corpus& full_corpus() {
        if (!full_) full_ = ingest(dir_ / "corpus.jsonl", FieldMap{}, cfg_.normalization);
        return *full_;
    }
    const Vocabulary& vocab() {
        if (!vocab_) {
            std::ifstream in(dir_ / "vocab.tsv");
            if (!in) throw Error(ErrorKind::Io, "cannot read " + (dir_ / "vocab.tsv").string());
            vocab_ = Vocabulary::read_tsv(in);
        }
        return *vocab_;
    }
    const Corpus& corpus() {
        if (!corpus_) corpus_ = retain_projectable(full_corpus(), vocab());
        return *corpus_;
    }
    const SlicedCorpus& sliced() {
        if (!sliced_) sliced_ = slice_corpus(corpus(), cfg_.start_year, cfg_.end_year, cfg_.window_len);
        return *sliced_;
    }
    const EmbeddingTensor& tensor() {
        if (!tensor_) {
            auto t = load_embeddings(dir_ / "embeddings.dyne");
            require_fingerprint(t, vocab().fingerprint());
            if (t.T() != sliced().size() || t.n() != vocab().size()) {
                throw Error(ErrorKind::Shape, "embedding shape does not match vocabulary and slicing");
            }
            tensor_ = std::move(t);
        }
        return *tensor_;
    }
    SpaceView space() { return SpaceView{corpus(), sliced(), vocab(), tensor()}; }

private:
    const PipelineConfig& cfg_;
    fs::path dir_;
    std::optional<Corpus> full_;
    std::optional<Vocabulary> vocab_;
    std::optional<Corpus> corpus_;
    std::optional<SlicedCorpus> sliced_;
    std::optional<EmbeddingTensor> tensor_;
};

using Outputs = std::vector<std::string>;

Outputs run_ingest(Workspace& ws) {
    const auto& cfg = ws.cfg();
    const Corpus corpus = ingest(cfg.corpus, cfg.fields, cfg.normalization);
    std::ostringstream out;
    write_corpus(out, corpus);
    write_file(ws.dir() / "corpus.jsonl", out.str());

    std::size_t background = 0;
    for (const auto& d : corpus.docs()) background += d.split == Split::Background;
    ojson info;
    info["documents"] = corpus.size();
    info["background"] = background;
    info["project"] = corpus.size() - background;
    info["skipped_lines"] = corpus.skipped_lines();
    write_file(ws.dir() / "ingest.json", info.dump(2) + "\n");
    return {"corpus.jsonl", "ingest.json"};
}

Outputs run_vocab(Workspace& ws) {
    const Vocabulary vocab = build_vocabulary(ws.full_corpus(), ws.cfg().min_freq);
    std::ostringstream out;
    vocab.write_tsv(out);
    write_file(ws.dir() / "vocab.tsv", out.str());
    return {"vocab.tsv"};
}

Outputs run_cooc(Workspace& ws) {
    const auto& cfg = ws.cfg();
    const auto& corpus = ws.corpus();
    const auto& sliced = ws.sliced();
    const auto& vocab = ws.vocab();
    Outputs outputs;
    std::ostringstream table;
    table << "period\tfirst_year\tlast_year\tdocuments\tpair_total\tnonzeros\n";
    for (const auto& slice : sliced.slices()) {
        const auto counts = count_cooccurrences(corpus, slice, vocab, cfg.cooc_window);
        const std::size_t n = vocab.size();
        const auto n_idx = static_cast<Eigen::Index>(n);
        PpmiMatrix ppmi = counts.total() == 0 ? PpmiMatrix(slice.period, n, SparseMatrix(n_idx, n_idx))
                                              : build_ppmi(counts, cfg.ppmi_shift);
        std::ostringstream out;
        write_ppmi(out, ppmi);
        write_file(ws.dir() / ppmi_name(slice.period), out.str());
        outputs.push_back(ppmi_name(slice.period));
        table << slice.period << '\t' << slice.first_year << '\t' << slice.last_year << '\t' << slice.docs.size()
              << '\t' << counts.total() << '\t' << ppmi.upper_nonzeros() << '\n';
    }
    write_file(ws.dir() / "slices.tsv", table.str());
    outputs.push_back("slices.tsv");
    return outputs;
}

Outputs run_train(Workspace& ws) {
    const std::size_t T = ws.sliced().size();
    std::vector<SparseMatrix> targets;
    targets.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        std::ifstream in(ws.dir() / ppmi_name(t));
        if (!in) throw Error(ErrorKind::Io, "cannot read " + (ws.dir() / ppmi_name(t)).string());
        auto ppmi = read_ppmi(in);
        if (ppmi.n() != ws.vocab().size()) throw Error(ErrorKind::Shape, ppmi_name(t) + " does not match the vocabulary");
        targets.push_back(ppmi.matrix());
    }
    TrainResult result = train(targets, ws.cfg().train);
    result.tensor.set_fingerprint(ws.vocab().fingerprint());
    save_embeddings(result.tensor, ws.dir() / "embeddings.dyne");

    std::ostringstream log;
    log << "sweep\tobjective\thalvings\trejected\n";
    log << 0 << '\t' << num(result.objective_log.front()) << "\t0\t0\n";
    for (std::size_t s = 0; s < result.sweeps.size(); ++s) {
        log << s + 1 << '\t' << num(result.sweeps[s].objective_after) << '\t' << result.sweeps[s].halvings << '\t'
            << result.sweeps[s].rejected << '\n';
    }
    write_file(ws.dir() / "train_log.tsv", log.str());
    return {"embeddings.dyne", "train_log.tsv"};
}

void append_vector(std::ostringstream& out, const Vector& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) out << ',' << num(v[j]);
    out << '\n';
}

std::string vector_header(std::size_t k) {
    std::string h;
    for (std::size_t j = 0; j < k; ++j) h += ",v" + std::to_string(j);
    return h + '\n';
}

Outputs run_project(Workspace& ws) {
    const auto space = ws.space();
    const std::size_t k = space.tensor.k();

    std::ostringstream docs;
    docs << "doc_id,t,split" << vector_header(k);
    for (std::size_t i = 0; i < space.corpus.size(); ++i) {
        const auto t = space.sliced.slice_of(i);
        if (!t) continue;
        const auto& doc = space.corpus.doc(i);
        docs << csv_field(doc.doc_id) << ',' << *t << ',' << to_string(doc.split);
        append_vector(docs, document_vector(doc, space.vocab, space.tensor.slice(*t)));
    }
    write_file(ws.dir() / "doc_vectors.csv", docs.str());

    std::ostringstream creators;
    creators << "creator_id,as_of,n_docs" << vector_header(k);
    for (const auto& id : space.sliced.creators()) {
        for (std::size_t as_of = 1; as_of <= space.tensor.T(); ++as_of) {
            try {
                const auto ev = experience_vector(space, id, as_of, ws.cfg().lookback);
                creators << csv_field(id) << ',' << as_of << ',' << ev.n_docs;
                append_vector(creators, ev.vector);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Degenerate) throw;
            }
        }
    }
    write_file(ws.dir() / "creator_vectors.csv", creators.str());
    return {"doc_vectors.csv", "creator_vectors.csv"};
}

// Project documents that can have a history: inside the span, after slice 0.
std::vector<std::size_t> analyzable_projects(const Corpus& corpus, const SlicedCorpus& sliced) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto t = sliced.slice_of(i);
        if (t && *t > 0 && corpus.doc(i).split == Split::Project) out.push_back(i);
    }
    return out;
}

Outputs run_taxonomy(Workspace& ws) {
    const auto& corpus = ws.corpus();
    const auto& sliced = ws.sliced();
    std::ostringstream out;
    for (std::size_t i : analyzable_projects(corpus, sliced)) {
        const auto& doc = corpus.doc(i);
        if (doc.categories.empty() || doc.creator_ids.empty()) continue;
        const auto r = evaluate_taxonomy(project_taxonomy(corpus, sliced, i, ws.cfg().lookback));
        ojson row;
        row["doc_id"] = doc.doc_id;
        row["t"] = *sliced.slice_of(i);
        row["integration"] = r.integration;
        row["speculation"] = r.speculation;
        row["integration_hits"] = r.integration_hits;
        row["speculated"] = r.speculated;
        row["n_categories"] = r.n_categories;
        row["n_members"] = r.n_members;
        out << row.dump() << '\n';
    }
    write_file(ws.dir() / "taxonomy.jsonl", out.str());
    return {"taxonomy.jsonl"};
}

Outputs run_diversity(Workspace& ws) {
    std::map<std::string, ojson> taxonomy;
    {
        std::istringstream in(read_file(ws.dir() / "taxonomy.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto row = ojson::parse(line);
            auto id = row.at("doc_id").get<std::string>();
            taxonomy[id] = std::move(row);
        }
    }

    const auto space = ws.space();
    std::ostringstream teams, members;
    std::size_t reported = 0, skipped = 0;
    for (std::size_t i : analyzable_projects(space.corpus, space.sliced)) {
        DiversityReport r;
        std::size_t n_listed = 0;
        try {
            const auto team = assemble_team(space, i, ws.cfg().lookback);
            n_listed = team.n_listed;
            r = team_report(team);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Degenerate) throw;
            ++skipped;
            continue;
        }
        ++reported;
        ojson row;
        row["doc_id"] = r.doc_id;
        row["t"] = r.t;
        row["n_listed"] = n_listed;
        row["n_members"] = r.n_members;
        row["bd"] = r.bd;
        row["pd"] = r.pd;
        row["theta_b_bar"] = r.theta_b_bar;
        row["theta_p_bar"] = r.theta_p_bar;
        row["mean_experience"] = r.mean_experience;
        row["prop_new_members"] = r.prop_new_members;
        row["prev_collaboration"] = r.prev_collaboration;
        row["centroid_task_distance"] = r.centroid_task_distance;
        row["experience_convergence"] = opt(r.experience_convergence);
        row["outcome"] = opt(r.outcome);
        if (auto it = taxonomy.find(r.doc_id); it != taxonomy.end()) {
            row["integration"] = it->second.at("integration");
            row["speculation"] = it->second.at("speculation");
        } else {
            row["integration"] = nullptr;
            row["speculation"] = nullptr;
        }
        teams << row.dump() << '\n';
        for (const auto& m : r.members) {
            ojson mr;
            mr["doc_id"] = r.doc_id;
            mr["creator_id"] = m.creator_id;
            mr["mbd"] = opt(m.mbd);
            mr["mpd"] = opt(m.mpd);
            members << mr.dump() << '\n';
        }
    }
    write_file(ws.dir() / "diversity.jsonl", teams.str());
    write_file(ws.dir() / "diversity_members.jsonl", members.str());
    ojson summary;
    summary["teams"] = reported;
    summary["skipped"] = skipped;
    write_file(ws.dir() / "diversity_summary.json", summary.dump(2) + "\n");
    return {"diversity.jsonl", "diversity_members.jsonl", "diversity_summary.json"};
}

ojson summary_json(const FlowSummary& s) {
    ojson row;
    row["t1"] = s.t1;
    row["t2"] = s.t2;
    row["pearson_r"] = opt(s.pearson_r);
    row["n_points"] = s.n_points;
    row["skipped"] = s.skipped;
    return row;
}

Outputs run_flow(Workspace& ws) {
    const auto space = ws.space();
    const auto& cfg = ws.cfg();
    const FlowResult result = flow_validation(space, cfg.flow);
    std::ostringstream rows;
    for (const auto& r : result.rows) {
        ojson row;
        row["slice_pair"] = r.slice_pair;
        row["focal_id"] = r.focal_id;
        row["t1"] = r.t1;
        row["t2"] = r.t2;
        row["in_flow"] = r.in_flow;
        row["innovation_count"] = r.innovation_count;
        rows << row.dump() << '\n';
    }
    write_file(ws.dir() / "flow.jsonl", rows.str());

    std::ostringstream summary;
    summary << summary_json(result.summary).dump() << '\n';
    if (cfg.flow_grid) {
        for (const auto& s : flow_grid(space, cfg.flow, kT1Grid, kT2Grid)) summary << summary_json(s).dump() << '\n';
    }
    write_file(ws.dir() / "flow_summary.jsonl", summary.str());
    return {"flow.jsonl", "flow_summary.jsonl"};
}

Outputs run_adopt(Workspace& ws) {
    const auto space = ws.space();
    const auto& cfg = ws.cfg();
    const auto records = build_adoption_table(space, cfg.adoption);
    std::ostringstream table;
    table << "creator_id,token,t,delta_d,theta_v_cos,theta_v,adopted\n";
    for (const auto& r : records) {
        table << csv_field(r.creator_id) << ',' << csv_field(space.vocab.token(r.token)) << ',' << r.t << ','
              << num(r.delta_d) << ',' << num(r.theta_v_cos) << ',' << num(r.theta_v) << ',' << (r.adopted ? 1 : 0)
              << '\n';
    }
    write_file(ws.dir() / "adoption.csv", table.str());

    const OlsFit fit = fit_adoption(records, cfg.adopt_demean);
    ojson out;
    out["n"] = fit.n;
    out["demeaned"] = cfg.adopt_demean;
    out["residual_ss"] = fit.residual_ss;
    out["terms"] = ojson::array();
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        ojson term;
        term["name"] = fit.names[j];
        term["coefficient"] = fit.coefficients[j];
        term["std_error"] = fit.std_errors[j];
        out["terms"].push_back(std::move(term));
    }
    write_file(ws.dir() / "adoption_fit.json", out.dump(2) + "\n");
    return {"adoption.csv", "adoption_fit.json"};
}

Outputs run_stage(Stage s, Workspace& ws) {
    switch (s) {
        case Stage::Ingest: return run_ingest(ws);
        case Stage::Vocab: return run_vocab(ws);
        case Stage::Cooc: return run_cooc(ws);
        case Stage::Train: return run_train(ws);
        case Stage::Project: return run_project(ws);
        case Stage::Taxonomy: return run_taxonomy(ws);
        case Stage::Diversity: return run_diversity(ws);
        case Stage::Flow: return run_flow(ws);
        case Stage::Adopt: return run_adopt(ws);
    }
    return {};
}

StageRecord* find_mut(RunManifest& m, std::string_view name) {
    for (auto& r : m.stages) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

void put_record(RunManifest& m, StageRecord rec) {
    if (auto* existing = find_mut(m, rec.name)) {
        *existing = std::move(rec);
    } else {
        m.stages.push_back(std::move(rec));
    }
    auto rank = [](const StageRecord& r) {
        const auto s = parse_stage(r.name);
        return s ? static_cast<int>(*s) : 1000;
    };
    std::stable_sort(m.stages.begin(), m.stages.end(),
                     [&](const StageRecord& a, const StageRecord& b) { return rank(a) < rank(b); });
}

}  // namespace

std::string_view to_string(Stage stage) {
    switch (stage) {
        case Stage::Ingest: return "ingest";
        case Stage::Vocab: return "vocab";
        case Stage::Cooc: return "cooc";
        case Stage::Train: return "train";
        case Stage::Project: return "project";
        case Stage::Taxonomy: return "taxonomy";
        case Stage::Diversity: return "diversity";
        case Stage::Flow: return "flow";
        case Stage::Adopt: return "adopt";
    }
    return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) {
    for (Stage s : kAllStages) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

std::vector<Stage> stage_closure(Stage stage) {
    std::set<Stage> need{stage};
    // dependencies always precede their dependents in kAllStages
    for (auto it = std::rbegin(kAllStages); it != std::rend(kAllStages); ++it) {
        if (!need.count(*it)) continue;
        for (Stage d : direct_deps(*it)) need.insert(d);
    }
    return {need.begin(), need.end()};
}

const StageRecord* RunManifest::find(std::string_view stage) const {
    for (const auto& r : stages) {
        if (r.name == stage) return &r;
    }
    return nullptr;
}

std::string RunManifest::to_json() const {
    ojson j;
    j["toolkit_version"] = toolkit_version;
    j["config_checksum"] = config_checksum;
    j["stages"] = ojson::array();
    for (const auto& r : stages) {
        ojson s;
        s["name"] = r.name;
        s["signature"] = r.signature;
        s["inputs"] = r.inputs;
        s["outputs"] = r.outputs;
        s["seconds"] = r.seconds;
        j["stages"].push_back(std::move(s));
    }
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
    RunManifest m;
    try {
        const auto j = ojson::parse(text);
        m.toolkit_version = j.at("toolkit_version").get<std::string>();
        m.config_checksum = j.at("config_checksum").get<std::string>();
        for (const auto& s : j.at("stages")) {
            StageRecord r;
            r.name = s.at("name").get<std::string>();
            r.signature = s.at("signature").get<std::string>();
            r.inputs = s.at("inputs").get<std::map<std::string, std::string>>();
            r.outputs = s.at("outputs").get<std::map<std::string, std::string>>();
            r.seconds = s.at("seconds").get<double>();
            m.stages.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("malformed manifest: ") + e.what());
    }
    return m;
}

RunResult run_pipeline(const PipelineConfig& config, std::optional<Stage> target) {
    const fs::path dir = config.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
    DirLock lock(dir);

    RunResult result;
    RunManifest previous;
    if (fs::exists(dir / kManifestFile)) previous = RunManifest::from_json(read_file(dir / kManifestFile));
    RunManifest& manifest = result.manifest;
    manifest = previous;
    manifest.toolkit_version = kToolkitVersion;
    manifest.config_checksum = to_hex(sha256(render_config(config)));

    std::vector<Stage> plan;
    if (target) {
        plan = stage_closure(*target);
    } else {
        plan.assign(std::begin(kAllStages), std::end(kAllStages));
    }

    Workspace ws(config);
    for (Stage s : plan) {
        const std::string name(to_string(s));
        try {
            StageRecord rec;
            rec.name = name;
            if (s == Stage::Ingest) {
                for (const auto& p : config.corpus) rec.inputs[p.string()] = sha256_file(p);
            } else {
                for (Stage d : direct_deps(s)) {
                    const auto* dep = manifest.find(to_string(d));
                    if (!dep) throw Error(ErrorKind::Internal, "dependency " + std::string(to_string(d)) + " has no record");
                    rec.inputs.insert(dep->outputs.begin(), dep->outputs.end());
                }
            }
            std::string sig = std::string(kToolkitVersion) + '\n' + name + '\n' + render_config(config, stage_keys(s));
            for (const auto& [file, sum] : rec.inputs) sig += file + '=' + sum + '\n';
            rec.signature = to_hex(sha256(sig));

            const auto* old = previous.find(name);
            bool reuse = old && old->signature == rec.signature;
            if (reuse) {
                for (const auto& [file, sum] : old->outputs) {
                    if (!fs::exists(dir / file)) {
                        reuse = false;
                        break;
                    }
                }
            }
            if (reuse) {
                for (const auto& [file, sum] : old->outputs) {
                    if (sha256_file(dir / file) != sum) {
                        throw Error(ErrorKind::Checksum, "checksum mismatch: " + (dir / file).string());
                    }
                }
                result.skipped.push_back(name);
                continue;
            }

            const auto start = std::chrono::steady_clock::now();
            const Outputs outs = run_stage(s, ws);
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            for (const auto& f : outs) rec.outputs[f] = sha256_file(dir / f);
            put_record(manifest, std::move(rec));
            write_file(dir / kManifestFile, manifest.to_json());
            result.executed.push_back(name);
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(e.kind(), name, e.what());
        } catch (const nlohmann::json::exception& e) {
            throw StageError(ErrorKind::Format, name, e.what());
        } catch (const fs::filesystem_error& e) {
            throw StageError(ErrorKind::Io, name, e.what());
        } catch (const std::exception& e) {
            throw StageError(ErrorKind::Internal, name, e.what());
        }
    }
    write_file(dir / kManifestFile, manifest.to_json());
    return result;
}

}  // namespace dynspace
