#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace landscape {

/// One bid-log line before encoding: ordered (field, attribute) pairs plus
/// the auction outcome. winning_price is present iff the auction was won,
/// and never exceeds the bid (second price).
struct RawRecord {
    std::vector<std::pair<std::string, std::string>> fields;
    std::int64_t bid_price = 0;
    bool won = false;
    std::optional<std::int64_t> winning_price;
};

/// Edge lists for numeric fields. A field listed here has its attribute
/// parsed as a number and replaced by a bin label before counting/encoding:
/// value < e0 -> "bin0", [e_i, e_{i+1}) -> "bin{i+1}", >= e_last -> "bin{n}".
struct BinSpec {
    std::map<std::string, std::vector<double>> edges;

    bool applies_to(const std::string& field) const { return edges.count(field) > 0; }
    std::string bin_label(const std::string& field, const std::string& attribute) const;

    /// Parses "field:e0,e1,...;field2:..." (the --bins CLI syntax).
    static BinSpec parse(std::string_view text);
    std::string to_string() const;
};

/// Sparse one-hot column map. Column 0 is a reserved always-on bias column;
/// every field additionally owns an "other" column that collects attributes
/// trimmed at build time or unseen at encode time.
struct Vocabulary {
    std::map<std::string, std::map<std::string, std::uint32_t>> index_of;
    std::map<std::string, std::uint32_t> other_bins;
    BinSpec bins;
    std::uint32_t dimension = 0;
    std::uint64_t trim_threshold = 0;

    /// Canonical text form: header "dimension \t trim_threshold", one
    /// "field \t attribute \t index" line per column (the reserved token
    /// __other__ marks per-field other columns), and optional
    /// "#bin \t field \t e0,e1,..." lines carrying numeric bin edges.
    std::string serialize() const;
    static Vocabulary deserialize(std::string_view text);

    /// FNV-1a over the canonical serialization; stored in model files so a
    /// model cannot be evaluated against the wrong column map.
    std::string checksum() const;
};

struct FeatureVector {
    std::vector<std::uint32_t> active;  // strictly increasing column indices
    std::uint32_t dimension = 0;
};

struct Observation {
    FeatureVector x;
    std::int64_t bid_price = 0;
    bool won = false;
    std::optional<std::int64_t> winning_price;
};

struct VocabularyOptions {
    std::uint64_t trim_threshold = 0;
    BinSpec bins;
    int threads = 1;
};

/// Counts (field, attribute) occurrences over the records (numeric fields
/// binned first), keeps attributes with count >= trim_threshold, and lays
/// out columns deterministically: bias, then fields in lexicographic order,
/// each with sorted kept attributes followed by its "other" column.
/// Throws DataError on an empty stream or a duplicated field in a record.
Vocabulary build_vocabulary(std::span<const RawRecord> records, const VocabularyOptions& options);

/// Encodes one record: the bias column plus one column per known field
/// (unseen attributes fall back to the field's other column, unknown fields
/// are skipped). Never throws.
Observation encode(const RawRecord& record, const Vocabulary& vocab);

std::vector<Observation> encode_all(std::span<const RawRecord> records, const Vocabulary& vocab);

/// Deterministic index partition: shuffle 0..n-1 with the seed, then cut at
/// round(r1*n) and round((r1+r2)*n). Sizes are within 1 of exact proportions.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

SplitIndices split_indices(std::size_t n, const std::array<double, 3>& ratios, std::uint64_t seed);

struct DatasetSplit {
    std::vector<Observation> train;
    std::vector<Observation> valid;
    std::vector<Observation> test;
};

/// Throws std::invalid_argument when the ratios do not sum to 1 (1e-9) or
/// the dataset is empty.
DatasetSplit split_dataset(std::span<const Observation> data, const std::array<double, 3>& ratios,
                           std::uint64_t seed);

double win_rate(std::span<const Observation> data);

// ---------------------------------------------------------------------------
// Bid-log file format: one record per line,
//   won(0|1) \t bid_price \t winning_price(empty if lost) \t f=v;f=v;...

RawRecord parse_log_line(std::string_view line, std::size_t line_number);
std::vector<RawRecord> read_log(const std::string& path);
std::string format_log_line(const RawRecord& record);
void write_log(const std::string& path, std::span<const RawRecord> records);

}  // namespace landscape
