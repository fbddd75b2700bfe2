#pragma once

#include "dynspace/checksum.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dynspace {

enum class Split { Background, Project };

std::string_view to_string(Split split);

/// A dated creative work. Background documents only feed embedding training;
/// project documents are additionally analyzed as team products.
struct Document {
    std::string doc_id;
    int year = 0;
    std::vector<std::string> tokens;
    std::vector<std::string> creator_ids;
    std::vector<std::string> categories;
    std::optional<double> outcome;
    Split split = Split::Project;
};

/// Maps canonical record fields onto the keys used by an input file.
struct FieldMap {
    std::string doc_id = "doc_id";
    std::string year = "year";
    std::string text = "text";
    std::string creators = "creators";
    std::string categories = "categories";
    std::string outcome = "outcome";
    std::string split = "split";
};

struct NormalizationRules {
    bool lowercase = true;
    bool strip_punctuation = true;
    std::size_t min_length = 2;
};

/// Whitespace tokenization followed by case folding, stripping of
/// non-alphanumeric edge characters and a minimum-length filter. Bytes >= 0x80
/// count as word characters so UTF-8 text passes through intact.
std::vector<std::string> normalize_tokens(std::string_view raw_text,
                                          const NormalizationRules& rules = {});

class Corpus {
public:
    Corpus() = default;
    /// Throws Error(InvalidArgument) on a duplicate doc_id.
    explicit Corpus(std::vector<Document> docs, std::size_t skipped_lines = 0);

    const std::vector<Document>& docs() const noexcept { return docs_; }
    const Document& doc(std::size_t i) const { return docs_.at(i); }
    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }
    std::size_t skipped_lines() const noexcept { return skipped_; }
    std::optional<std::size_t> find(std::string_view doc_id) const;

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::size_t skipped_ = 0;
};

/// Parses line-delimited JSON records. Malformed lines are skipped and
/// counted; zero valid records or a duplicate doc_id is an error.
Corpus parse_corpus(std::istream& in, const FieldMap& fields = {},
                    const NormalizationRules& rules = {});

Corpus ingest(const std::filesystem::path& path, const FieldMap& fields = {},
              const NormalizationRules& rules = {});

/// Several shard files merged in the given order.
Corpus ingest(const std::vector<std::filesystem::path>& paths, const FieldMap& fields = {},
              const NormalizationRules& rules = {});

/// Canonical JSONL rendering: tokens are written pre-normalized in `text`.
void write_corpus(std::ostream& out, const Corpus& corpus);

class Vocabulary {
public:
    Vocabulary() = default;
    /// Entries must already be in index order.
    Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> frequencies);

    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }
    const std::string& token(std::size_t index) const { return tokens_.at(index); }
    std::uint64_t frequency(std::size_t index) const { return freqs_.at(index); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    std::optional<std::size_t> index_of(std::string_view token) const;

    /// SHA-256 over the newline-joined token list; binds embeddings to a vocabulary.
    Digest fingerprint() const;

    void write_tsv(std::ostream& out) const;
    static Vocabulary read_tsv(std::istream& in);

private:
    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> freqs_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Tokens with total frequency >= min_freq, ordered by frequency descending
/// then lexicographically.
Vocabulary build_vocabulary(const Corpus& corpus, std::uint64_t min_freq = 150);

/// Vocabulary index of every token, -1 for out-of-vocabulary positions.
std::vector<std::int32_t> encode(const Document& doc, const Vocabulary& vocab);

/// Drops documents without a single in-vocabulary token.
Corpus retain_projectable(const Corpus& corpus, const Vocabulary& vocab,
                          std::size_t* dropped = nullptr);

struct Slice {
    std::size_t period = 0;
    int first_year = 0;
    int last_year = 0;
    std::vector<std::size_t> docs;  // indices into the corpus
};

class SlicedCorpus {
public:
    SlicedCorpus() = default;
    SlicedCorpus(std::vector<Slice> slices, std::vector<std::optional<std::size_t>> slice_of_doc,
                 std::unordered_map<std::string, std::vector<std::size_t>> docs_by_creator,
                 std::size_t dropped);

    const std::vector<Slice>& slices() const noexcept { return slices_; }
    const Slice& slice(std::size_t t) const { return slices_.at(t); }
    std::size_t size() const noexcept { return slices_.size(); }
    std::optional<std::size_t> slice_of(std::size_t doc_index) const { return slice_of_doc_.at(doc_index); }
    std::size_t dropped() const noexcept { return dropped_; }
    const std::vector<std::size_t>& docs_of(std::string_view creator_id) const;
    std::vector<std::string> creators() const;

private:
    std::vector<Slice> slices_;
    std::vector<std::optional<std::size_t>> slice_of_doc_;
    std::unordered_map<std::string, std::vector<std::size_t>> docs_by_creator_;
    std::size_t dropped_ = 0;
};

/// ceil(span / window_len) contiguous slices; documents outside the span are
/// dropped and counted.
SlicedCorpus slice_corpus(const Corpus& corpus, int start_year, int end_year, int window_len);

/// Documents listing `creator_id` whose slice lies in [as_of - lookback, as_of - 1],
/// ordered by slice then corpus position.
std::vector<std::size_t> creator_history(const SlicedCorpus& sliced, std::string_view creator_id,
                                         std::size_t as_of, std::size_t lookback);

/// Documents listing `creator_id` in exactly slice `t`.
std::vector<std::size_t> creator_docs_in_slice(const SlicedCorpus& sliced,
                                               std::string_view creator_id, std::size_t t);

}  // namespace dynspace
