#include "landscape/featurize.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "landscape/common.hpp"
#include "landscape/parallel.hpp"

namespace landscape {

std::string BinSpec::bin_label(const std::string& field, const std::string& attribute) const {
    const auto it = edges.find(field);
    if (it == edges.end()) return attribute;
    double value = 0.0;
    try {
        value = parse_double(attribute, field);
    } catch (const DataError&) {
        // Unparsable numeric attribute keeps its raw form and competes for a
        // column like any categorical value.
        return attribute;
    }
    const auto& e = it->second;
    const std::size_t bin = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), value) - e.begin());
    return "bin" + std::to_string(bin);
}

BinSpec BinSpec::parse(std::string_view text) {
    BinSpec spec;
    if (trim(text).empty()) return spec;
    for (const std::string& part : split(text, ';')) {
        if (trim(part).empty()) continue;
        const std::size_t colon = part.find(':');
        if (colon == std::string::npos) throw DataError("bin spec: expected field:e0,e1,... in '" + part + "'");
        const std::string field(trim(std::string_view(part).substr(0, colon)));
        std::vector<double> edges;
        for (const std::string& e : split(std::string_view(part).substr(colon + 1), ',')) {
            edges.push_back(parse_double(e, "bin edge"));
        }
        if (field.empty() || edges.empty()) throw DataError("bin spec: empty field or edge list");
        if (!std::is_sorted(edges.begin(), edges.end())) throw DataError("bin spec: edges must be ascending");
        spec.edges[field] = std::move(edges);
    }
    return spec;
}

std::string BinSpec::to_string() const {
    std::ostringstream out;
    bool first_field = true;
    for (const auto& [field, e] : edges) {
        if (!first_field) out << ';';
        first_field = false;
        out << field << ':';
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (i) out << ',';
            out << format_double(e[i]);
        }
    }
    return out.str();
}

namespace {

constexpr const char* kOtherToken = "__other__";

void check_no_duplicate_fields(const RawRecord& record) {
    std::set<std::string_view> seen;
    for (const auto& [field, _] : record.fields) {
        if (!seen.insert(field).second) {
            throw DataError("malformed record: duplicate field '" + field + "'");
        }
    }
}

}  // namespace

Vocabulary build_vocabulary(std::span<const RawRecord> records, const VocabularyOptions& options) {
    if (records.empty()) throw DataError("no records");

    using Counts = std::map<std::string, std::map<std::string, std::uint64_t>>;
    const std::size_t chunk = 4096;
    const std::size_t n_chunks = (records.size() + chunk - 1) / chunk;
    std::vector<Counts> partials(n_chunks);
    for_each_chunk(records.size(), chunk, options.threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Counts& counts = partials[c];
        for (std::size_t i = begin; i < end; ++i) {
            check_no_duplicate_fields(records[i]);
            for (const auto& [field, attribute] : records[i].fields) {
                ++counts[field][options.bins.bin_label(field, attribute)];
            }
        }
    });

    Counts counts;
    for (Counts& part : partials) {
        for (auto& [field, attrs] : part) {
            auto& dst = counts[field];
            for (auto& [attr, n] : attrs) dst[attr] += n;
        }
    }

    Vocabulary vocab;
    vocab.bins = options.bins;
    vocab.trim_threshold = options.trim_threshold;
    std::uint32_t next = 1;  // column 0 is the bias
    for (const auto& [field, attrs] : counts) {
        auto& field_map = vocab.index_of[field];
        for (const auto& [attr, n] : attrs) {
            if (n >= options.trim_threshold) {
                field_map[attr] = next++;
            }
        }
        vocab.other_bins[field] = next++;
    }
    vocab.dimension = next;
    return vocab;
}

Observation encode(const RawRecord& record, const Vocabulary& vocab) {
    Observation obs;
    obs.bid_price = record.bid_price;
    obs.won = record.won;
    obs.winning_price = record.winning_price;
    obs.x.dimension = vocab.dimension;

    std::set<std::uint32_t> active;
    active.insert(0);
    std::set<std::string_view> seen_fields;
    for (const auto& [field, attribute] : record.fields) {
        if (!seen_fields.insert(field).second) continue;  // first occurrence wins
        const auto field_it = vocab.index_of.find(field);
        if (field_it == vocab.index_of.end()) continue;  // unknown field
        const std::string label = vocab.bins.bin_label(field, attribute);
        const auto attr_it = field_it->second.find(label);
        if (attr_it != field_it->second.end()) {
            active.insert(attr_it->second);
        } else {
            active.insert(vocab.other_bins.at(field));
        }
    }
    obs.x.active.assign(active.begin(), active.end());
    return obs;
}

std::vector<Observation> encode_all(std::span<const RawRecord> records, const Vocabulary& vocab) {
    std::vector<Observation> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) out[i] = encode(records[i], vocab);
    return out;
}

std::string Vocabulary::serialize() const {
    std::ostringstream out;
    out << dimension << '\t' << trim_threshold << '\n';
    for (const auto& [field, e] : bins.edges) {
        out << "#bin\t" << field << '\t';
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (i) out << ',';
            out << format_double(e[i]);
        }
        out << '\n';
    }
    for (const auto& [field, attrs] : index_of) {
        for (const auto& [attr, index] : attrs) {
            out << field << '\t' << attr << '\t' << index << '\n';
        }
        out << field << '\t' << kOtherToken << '\t' << other_bins.at(field) << '\n';
    }
    return out.str();
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
    Vocabulary vocab;
    const std::vector<std::string> lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]).empty()) throw DataError("vocabulary: missing header");
    const std::vector<std::string> header = split(lines[0], '\t');
    if (header.size() != 2) throw DataError("vocabulary: header must be 'dimension \\t trim_threshold'");
    vocab.dimension = static_cast<std::uint32_t>(parse_int64(header[0], "vocabulary dimension"));
    vocab.trim_threshold = static_cast<std::uint64_t>(parse_int64(header[1], "vocabulary trim threshold"));

    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::vector<std::string> cols = split(lines[i], '\t');
        if (cols.size() != 3) throw DataError("vocabulary: bad line " + std::to_string(i + 1));
        if (cols[0] == "#bin") {
            std::vector<double> edges;
            for (const std::string& e : split(cols[2], ',')) edges.push_back(parse_double(e, "bin edge"));
            vocab.bins.edges[cols[1]] = std::move(edges);
            continue;
        }
        const auto index = static_cast<std::uint32_t>(parse_int64(cols[2], "vocabulary index"));
        if (index == 0 || index >= vocab.dimension) throw DataError("vocabulary: index out of range at line " + std::to_string(i + 1));
        if (cols[1] == kOtherToken) {
            vocab.other_bins[cols[0]] = index;
        } else {
            vocab.index_of[cols[0]][cols[1]] = index;
        }
    }
    for (const auto& [field, _] : vocab.index_of) {
        if (!vocab.other_bins.count(field)) throw DataError("vocabulary: field '" + field + "' lacks an other column");
    }
    return vocab;
}

std::string Vocabulary::checksum() const {
    return to_hex(fnv1a64(serialize()));
}

SplitIndices split_indices(std::size_t n, const std::array<double, 3>& ratios, std::uint64_t seed) {
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");
    if (n == 0) throw std::invalid_argument("cannot split an empty dataset");

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(mix_seed(seed, fnv1a64("split")));
    shuffle_indices(idx, rng);

    const auto cut1 = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
    const auto cut2 = static_cast<std::size_t>(std::llround((ratios[0] + ratios[1]) * static_cast<double>(n)));
    SplitIndices out;
    out.train.assign(idx.begin(), idx.begin() + cut1);
    out.valid.assign(idx.begin() + cut1, idx.begin() + cut2);
    out.test.assign(idx.begin() + cut2, idx.end());
    return out;
}

DatasetSplit split_dataset(std::span<const Observation> data, const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
    const SplitIndices idx = split_indices(data.size(), ratios, seed);
    DatasetSplit out;
    const auto gather = [&](const std::vector<std::size_t>& which, std::vector<Observation>& dst) {
        dst.reserve(which.size());
        for (std::size_t i : which) dst.push_back(data[i]);
    };
    gather(idx.train, out.train);
    gather(idx.valid, out.valid);
    gather(idx.test, out.test);
    return out;
}

double win_rate(std::span<const Observation> data) {
    if (data.empty()) return 0.0;
    std::size_t wins = 0;
    for (const Observation& o : data) wins += o.won ? 1 : 0;
    return static_cast<double>(wins) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Log file format

RawRecord parse_log_line(std::string_view line, std::size_t line_number) {
    const std::string where = "log line " + std::to_string(line_number);
    const std::vector<std::string> cols = split(line, '\t');
    if (cols.size() != 4) throw DataError(where + ": expected 4 tab-separated columns");

    RawRecord rec;
    if (cols[0] == "1") {
        rec.won = true;
    } else if (cols[0] == "0") {
        rec.won = false;
    } else {
        throw DataError(where + ": won flag must be 0 or 1");
    }
    rec.bid_price = parse_int64(cols[1], where + " bid");
    if (rec.bid_price < 0) throw DataError(where + ": negative bid");

    const std::string_view wp = trim(cols[2]);
    if (rec.won) {
        if (wp.empty()) throw DataError(where + ": won record missing winning price");
        rec.winning_price = parse_int64(wp, where + " winning price");
        if (*rec.winning_price < 0) throw DataError(where + ": negative winning price");
        if (*rec.winning_price > rec.bid_price) throw DataError(where + ": winning price exceeds bid");
    } else if (!wp.empty()) {
        throw DataError(where + ": lost record carries a winning price");
    }

    std::set<std::string> seen;
    for (const std::string& pair : split(cols[3], ';')) {
        if (trim(pair).empty()) continue;
        const std::size_t eq = pair.find('=');
        if (eq == std::string::npos || eq == 0) throw DataError(where + ": bad field=value pair '" + pair + "'");
        std::string field = pair.substr(0, eq);
        std::string value = pair.substr(eq + 1);
        if (!seen.insert(field).second) throw DataError(where + ": malformed record: duplicate field '" + field + "'");
        rec.fields.emplace_back(std::move(field), std::move(value));
    }
    return rec;
}

std::vector<RawRecord> read_log(const std::string& path) {
    const std::string text = read_file(path);
    std::vector<RawRecord> records;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const std::string_view line(text.data() + start, end - start);
        if (!trim(line).empty()) records.push_back(parse_log_line(line, line_no));
        start = end + 1;
    }
    return records;
}

std::string format_log_line(const RawRecord& record) {
    std::ostringstream out;
    out << (record.won ? '1' : '0') << '\t' << record.bid_price << '\t';
    if (record.winning_price) out << *record.winning_price;
    out << '\t';
    for (std::size_t i = 0; i < record.fields.size(); ++i) {
        if (i) out << ';';
        out << record.fields[i].first << '=' << record.fields[i].second;
    }
    return out.str();
}

void write_log(const std::string& path, std::span<const RawRecord> records) {
    std::ostringstream out;
    for (const RawRecord& r : records) out << format_log_line(r) << '\n';
    write_file(path, out.str());
}

}  // namespace landscape
