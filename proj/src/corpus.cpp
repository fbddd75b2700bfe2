#include "dynspace/corpus.hpp"

#include "dynspace/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace dynspace {

using nlohmann::json;

std::string_view to_string(Split split) {
    return split == Split::Background ? "background" : "project";
}

namespace {

bool is_word_byte(unsigned char c) {
    return c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::optional<std::vector<std::string>> string_array(const json& record, const std::string& key) {
    auto it = record.find(key);
    if (it == record.end() || it->is_null()) return std::vector<std::string>{};
    if (!it->is_array()) return std::nullopt;
    std::vector<std::string> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_string()) return std::nullopt;
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::optional<Document> parse_record(const json& record, const FieldMap& fields,
                                     const NormalizationRules& rules) {
    if (!record.is_object()) return std::nullopt;
    Document doc;

    auto id = record.find(fields.doc_id);
    if (id == record.end() || !id->is_string() || id->get<std::string>().empty()) return std::nullopt;
    doc.doc_id = id->get<std::string>();

    auto year = record.find(fields.year);
    if (year == record.end() || !year->is_number_integer()) return std::nullopt;
    doc.year = year->get<int>();

    auto text = record.find(fields.text);
    if (text == record.end() || !text->is_string()) return std::nullopt;
    doc.tokens = normalize_tokens(text->get_ref<const std::string&>(), rules);

    auto creators = string_array(record, fields.creators);
    auto categories = string_array(record, fields.categories);
    if (!creators || !categories) return std::nullopt;
    doc.creator_ids = std::move(*creators);
    doc.categories = std::move(*categories);

    if (auto outcome = record.find(fields.outcome); outcome != record.end() && !outcome->is_null()) {
        if (!outcome->is_number()) return std::nullopt;
        doc.outcome = outcome->get<double>();
    }

    if (auto split = record.find(fields.split); split != record.end() && !split->is_null()) {
        if (!split->is_string()) return std::nullopt;
        const auto& s = split->get_ref<const std::string&>();
        if (s == "background") doc.split = Split::Background;
        else if (s == "project") doc.split = Split::Project;
        else return std::nullopt;
    }
    return doc;
}

void parse_lines(std::istream& in, const FieldMap& fields, const NormalizationRules& rules,
                 std::vector<Document>& docs, std::size_t& skipped) {
    std::string line;
    while (std::getline(in, line)) {
        if (std::all_of(line.begin(), line.end(),
                        [](char c) { return is_space_byte(static_cast<unsigned char>(c)); })) {
            continue;
        }
        json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (record.is_discarded()) {
            ++skipped;
            continue;
        }
        auto doc = parse_record(record, fields, rules);
        if (!doc) {
            ++skipped;
            continue;
        }
        docs.push_back(std::move(*doc));
    }
}

}  // namespace

std::vector<std::string> normalize_tokens(std::string_view raw_text, const NormalizationRules& rules) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < raw_text.size()) {
        while (pos < raw_text.size() && is_space_byte(static_cast<unsigned char>(raw_text[pos]))) ++pos;
        std::size_t end = pos;
        while (end < raw_text.size() && !is_space_byte(static_cast<unsigned char>(raw_text[end]))) ++end;
        std::string_view word = raw_text.substr(pos, end - pos);
        pos = end;
        if (rules.strip_punctuation) {
            while (!word.empty() && !is_word_byte(static_cast<unsigned char>(word.front()))) word.remove_prefix(1);
            while (!word.empty() && !is_word_byte(static_cast<unsigned char>(word.back()))) word.remove_suffix(1);
        }
        if (word.empty() || word.size() < rules.min_length) continue;
        std::string token(word);
        if (rules.lowercase) {
            for (char& c : token) {
                if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            }
        }
        out.push_back(std::move(token));
    }
    return out;
}

Corpus::Corpus(std::vector<Document> docs, std::size_t skipped_lines)
    : docs_(std::move(docs)), skipped_(skipped_lines) {
    by_id_.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        if (!by_id_.emplace(docs_[i].doc_id, i).second) {
            throw Error(ErrorKind::InvalidArgument, "duplicate doc_id: " + docs_[i].doc_id);
        }
    }
}

std::optional<std::size_t> Corpus::find(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
}

Corpus parse_corpus(std::istream& in, const FieldMap& fields, const NormalizationRules& rules) {
    std::vector<Document> docs;
    std::size_t skipped = 0;
    parse_lines(in, fields, rules, docs, skipped);
    if (docs.empty()) throw Error(ErrorKind::InvalidArgument, "zero valid records");
    return Corpus(std::move(docs), skipped);
}

Corpus ingest(const std::filesystem::path& path, const FieldMap& fields, const NormalizationRules& rules) {
    return ingest(std::vector<std::filesystem::path>{path}, fields, rules);
}

Corpus ingest(const std::vector<std::filesystem::path>& paths, const FieldMap& fields,
              const NormalizationRules& rules) {
    std::vector<Document> docs;
    std::size_t skipped = 0;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorKind::Io, "cannot read corpus file " + path.string());
        parse_lines(in, fields, rules, docs, skipped);
    }
    if (docs.empty()) throw Error(ErrorKind::InvalidArgument, "zero valid records");
    return Corpus(std::move(docs), skipped);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
    for (const auto& doc : corpus.docs()) {
        std::string text;
        for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
            if (i) text.push_back(' ');
            text += doc.tokens[i];
        }
        json record = {
            {"doc_id", doc.doc_id},
            {"year", doc.year},
            {"text", text},
            {"creators", doc.creator_ids},
            {"categories", doc.categories},
            {"split", std::string(to_string(doc.split))},
        };
        record["outcome"] = doc.outcome ? json(*doc.outcome) : json(nullptr);
        out << record.dump() << '\n';
    }
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> frequencies)
    : tokens_(std::move(tokens)), freqs_(std::move(frequencies)) {
    if (tokens_.size() != freqs_.size()) {
        throw Error(ErrorKind::Shape, "vocabulary: token and frequency counts differ");
    }
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], i).second) {
            throw Error(ErrorKind::InvalidArgument, "vocabulary: duplicate token " + tokens_[i]);
        }
    }
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Digest Vocabulary::fingerprint() const {
    std::string joined;
    for (const auto& t : tokens_) {
        joined += t;
        joined.push_back('\n');
    }
    return sha256(joined);
}

void Vocabulary::write_tsv(std::ostream& out) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        out << i << '\t' << tokens_[i] << '\t' << freqs_[i] << '\n';
    }
}

Vocabulary Vocabulary::read_tsv(std::istream& in) {
    std::vector<std::string> tokens;
    std::vector<std::uint64_t> freqs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto a = line.find('\t');
        const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
        if (b == std::string::npos) throw Error(ErrorKind::Format, "vocabulary: malformed line: " + line);
        try {
            const std::size_t index = std::stoull(line.substr(0, a));
            if (index != tokens.size()) throw Error(ErrorKind::Format, "vocabulary: indices not dense");
            tokens.push_back(line.substr(a + 1, b - a - 1));
            freqs.push_back(std::stoull(line.substr(b + 1)));
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::Format, "vocabulary: malformed line: " + line);
        }
    }
    return Vocabulary(std::move(tokens), std::move(freqs));
}

Vocabulary build_vocabulary(const Corpus& corpus, std::uint64_t min_freq) {
    if (corpus.empty()) throw Error(ErrorKind::InvalidArgument, "build_vocabulary: empty corpus");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& doc : corpus.docs()) {
        for (const auto& t : doc.tokens) ++counts[t];
    }
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [token, freq] : counts) {
        if (freq >= min_freq) kept.emplace_back(token, freq);
    }
    if (kept.empty()) throw Error(ErrorKind::InvalidArgument, "empty vocabulary after thresholding");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> tokens;
    std::vector<std::uint64_t> freqs;
    tokens.reserve(kept.size());
    freqs.reserve(kept.size());
    for (auto& [token, freq] : kept) {
        tokens.push_back(std::move(token));
        freqs.push_back(freq);
    }
    return Vocabulary(std::move(tokens), std::move(freqs));
}

std::vector<std::int32_t> encode(const Document& doc, const Vocabulary& vocab) {
    std::vector<std::int32_t> ids;
    ids.reserve(doc.tokens.size());
    for (const auto& t : doc.tokens) {
        auto idx = vocab.index_of(t);
        ids.push_back(idx ? static_cast<std::int32_t>(*idx) : -1);
    }
    return ids;
}

Corpus retain_projectable(const Corpus& corpus, const Vocabulary& vocab, std::size_t* dropped) {
    std::vector<Document> kept;
    std::size_t n_dropped = 0;
    for (const auto& doc : corpus.docs()) {
        const bool any = std::any_of(doc.tokens.begin(), doc.tokens.end(),
                                     [&](const std::string& t) { return vocab.index_of(t).has_value(); });
        if (any) kept.push_back(doc);
        else ++n_dropped;
    }
    if (dropped) *dropped = n_dropped;
    if (kept.empty()) throw Error(ErrorKind::InvalidArgument, "no document has an in-vocabulary token");
    return Corpus(std::move(kept), corpus.skipped_lines());
}

SlicedCorpus::SlicedCorpus(std::vector<Slice> slices, std::vector<std::optional<std::size_t>> slice_of_doc,
                           std::unordered_map<std::string, std::vector<std::size_t>> docs_by_creator,
                           std::size_t dropped)
    : slices_(std::move(slices)),
      slice_of_doc_(std::move(slice_of_doc)),
      docs_by_creator_(std::move(docs_by_creator)),
      dropped_(dropped) {}

const std::vector<std::size_t>& SlicedCorpus::docs_of(std::string_view creator_id) const {
    static const std::vector<std::size_t> kNone;
    auto it = docs_by_creator_.find(std::string(creator_id));
    return it == docs_by_creator_.end() ? kNone : it->second;
}

std::vector<std::string> SlicedCorpus::creators() const {
    std::vector<std::string> out;
    out.reserve(docs_by_creator_.size());
    for (const auto& [id, docs] : docs_by_creator_) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

SlicedCorpus slice_corpus(const Corpus& corpus, int start_year, int end_year, int window_len) {
    if (end_year < start_year) throw Error(ErrorKind::InvalidArgument, "slice_corpus: end_year < start_year");
    if (window_len < 1) throw Error(ErrorKind::InvalidArgument, "slice_corpus: window_len must be >= 1");

    const int span = end_year - start_year + 1;
    const int n_slices = (span + window_len - 1) / window_len;
    std::vector<Slice> slices(static_cast<std::size_t>(n_slices));
    for (int t = 0; t < n_slices; ++t) {
        auto& s = slices[static_cast<std::size_t>(t)];
        s.period = static_cast<std::size_t>(t);
        s.first_year = start_year + t * window_len;
        s.last_year = std::min(end_year, s.first_year + window_len - 1);
    }

    std::vector<std::optional<std::size_t>> slice_of(corpus.size());
    std::unordered_map<std::string, std::vector<std::size_t>> by_creator;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& doc = corpus.doc(i);
        if (doc.year < start_year || doc.year > end_year) {
            ++dropped;
            continue;
        }
        const auto t = static_cast<std::size_t>((doc.year - start_year) / window_len);
        slices[t].docs.push_back(i);
        slice_of[i] = t;
        for (const auto& c : doc.creator_ids) {
            auto& list = by_creator[c];
            if (list.empty() || list.back() != i) list.push_back(i);
        }
    }
    return SlicedCorpus(std::move(slices), std::move(slice_of), std::move(by_creator), dropped);
}

std::vector<std::size_t> creator_history(const SlicedCorpus& sliced, std::string_view creator_id,
                                         std::size_t as_of, std::size_t lookback) {
    std::vector<std::size_t> out;
    if (lookback == 0 || as_of == 0) return out;
    const std::size_t lo = as_of > lookback ? as_of - lookback : 0;
    for (std::size_t i : sliced.docs_of(creator_id)) {
        const auto t = sliced.slice_of(i);
        if (t && *t >= lo && *t < as_of) out.push_back(i);
    }
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
        return *sliced.slice_of(a) < *sliced.slice_of(b);
    });
    return out;
}

std::vector<std::size_t> creator_docs_in_slice(const SlicedCorpus& sliced, std::string_view creator_id,
                                               std::size_t t) {
    std::vector<std::size_t> out;
    for (std::size_t i : sliced.docs_of(creator_id)) {
        if (sliced.slice_of(i) == t) out.push_back(i);
    }
    return out;
}

}  // namespace dynspace
