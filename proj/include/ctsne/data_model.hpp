#ifndef CTSNE_DATA_MODEL_HPP
#define CTSNE_DATA_MODEL_HPP

#include "common.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace ctsne {

/// n x d numeric table with attribute names and opaque row ids.
struct Dataset {
    Matrix points;
    std::vector<std::string> attribute_names;
    std::vector<std::string> row_ids;

    std::size_t size() const { return points.rows(); }
    std::size_t dims() const { return points.cols(); }

    /// Builds a dataset with generated names ("x1".."xd") and ids ("0".."n-1").
    static Dataset from_matrix(Matrix points, std::vector<std::string> names = {}) {
        Dataset out;
        if (names.empty()) {
            for (std::size_t j = 0; j < points.cols(); ++j) {
                names.push_back("x" + std::to_string(j + 1));
            }
        }
        out.attribute_names = std::move(names);
        for (std::size_t i = 0; i < points.rows(); ++i) {
            out.row_ids.push_back(std::to_string(i));
        }
        out.points = std::move(points);
        out.validate();
        return out;
    }

    void validate() const {
        require(points.rows() >= 2, "dataset needs at least 2 points, got " + std::to_string(points.rows()));
        require(points.cols() >= 1, "dataset needs at least 1 attribute");
        require(attribute_names.size() == points.cols(), "attribute name count does not match column count");
        require(row_ids.size() == points.rows(), "row id count does not match row count");
        require(points.all_finite(), "dataset contains non-finite values");
        std::unordered_set<std::string> seen;
        for (const auto& name : attribute_names) {
            require(seen.insert(name).second, "duplicate attribute name '" + name + "'");
        }
    }
};

/**
 * Per-point integer labels densely coded to [0, L) in first-appearance order.
 */
class LabelVector {
public:
    LabelVector() = default;

    /// Re-codes arbitrary hashable values; the first distinct value becomes 0.
    template <typename Range>
    static LabelVector encode(const Range& values) {
        using Value = std::decay_t<decltype(*std::begin(values))>;
        std::unordered_map<Value, std::uint32_t> codes;
        LabelVector out;
        for (const auto& v : values) {
            auto [it, inserted] = codes.try_emplace(v, static_cast<std::uint32_t>(codes.size()));
            if (inserted) {
                out.class_sizes_.push_back(0);
            }
            out.labels_.push_back(it->second);
            ++out.class_sizes_[it->second];
        }
        return out;
    }

    std::size_t size() const { return labels_.size(); }
    std::size_t num_classes() const { return class_sizes_.size(); }
    std::uint32_t operator[](std::size_t i) const { return labels_[i]; }
    const std::vector<std::uint32_t>& labels() const { return labels_; }
    const std::vector<std::size_t>& class_sizes() const { return class_sizes_; }

    friend bool operator==(const LabelVector&, const LabelVector&) = default;

private:
    std::vector<std::uint32_t> labels_;
    std::vector<std::size_t> class_sizes_;
};

/// A label vector with a single class covering n points (plain t-SNE).
inline LabelVector constant_labels(std::size_t n) {
    return LabelVector::encode(std::vector<int>(n, 0));
}

/**
 * Joint labeling: the output label of i depends only on the pair (a_i, b_i),
 * and distinct pairs get distinct labels.
 */
inline LabelVector combine_labels(const LabelVector& a, const LabelVector& b) {
    require(a.size() == b.size(), "cannot combine label vectors of different lengths (" +
                                      std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    std::vector<std::uint64_t> pairs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        pairs[i] = (static_cast<std::uint64_t>(a[i]) << 32) | b[i];
    }
    return LabelVector::encode(pairs);
}

struct EmbeddingMatrix {
    Matrix coords;

    std::size_t size() const { return coords.rows(); }
    std::size_t dims() const { return coords.cols(); }
    std::span<const double> operator[](std::size_t i) const { return coords.row(i); }
};

/// Parameters and outcome of one embedding run, serialized as a JSON sidecar.
struct RunMetadata {
    double perplexity = 30;
    double beta_prime = 1;
    double alpha_prime = 1;
    double theta = 0.5;
    int iterations = 1000;
    std::uint64_t seed = 0;
    int restarts = 1;
    std::string engine = "bh";
    double final_objective = 0;
    int iterations_run = 0;
    /// (iteration, objective) samples; every 50th iteration plus the final one.
    std::vector<std::pair<int, double>> trace;
    std::vector<double> restart_objectives;
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const {
        nlohmann::json trace_json = nlohmann::json::array();
        for (const auto& [iter, obj] : trace) {
            trace_json.push_back({{"iteration", iter}, {"objective", obj}});
        }
        nlohmann::json out = {
            {"parameters",
             {{"perplexity", perplexity},
              {"beta_prime", beta_prime},
              {"alpha_prime", alpha_prime},
              {"theta", theta},
              {"iterations", iterations},
              {"seed", seed},
              {"restarts", restarts},
              {"engine", engine}}},
            {"final_objective", final_objective},
            {"iterations_run", iterations_run},
            {"restart_objectives", restart_objectives},
            {"trace", trace_json},
        };
        for (auto it = extra.begin(); it != extra.end(); ++it) {
            out["parameters"][it.key()] = it.value();
        }
        return out;
    }
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) {
        s.remove_suffix(1);
    }
    while (!s.empty() && s.front() == ' ') {
        s.remove_prefix(1);
    }
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return value;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            lines.push_back(std::move(line));
        }
    }
    return lines;
}

/// Shortest decimal text with 17 significant digits, which round-trips doubles.
inline void append_double(std::string& out, double v) {
    char buf[32];
    const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
    out.append(buf, static_cast<std::size_t>(len));
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << text;
}

} // namespace detail

enum class TableFormat { tsv, csv };

inline TableFormat format_for(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? TableFormat::csv : TableFormat::tsv;
}

/// Parses a header-plus-rows table from memory. Every data cell must be a finite real.
inline Dataset parse_dataset(std::string_view text, TableFormat format = TableFormat::tsv) {
    const char delim = format == TableFormat::csv ? ',' : '\t';
    std::vector<std::string_view> lines;
    for (auto line : detail::split(text, '\n')) {
        if (!detail::trim(line).empty()) {
            lines.push_back(line);
        }
    }
    if (lines.empty()) {
        throw ValidationError("dataset is empty (no header row)");
    }
    Dataset out;
    for (auto name : detail::split(detail::trim(lines[0]), delim)) {
        out.attribute_names.emplace_back(detail::trim(name));
    }
    const std::size_t d = out.attribute_names.size();
    std::vector<double> values;
    values.reserve((lines.size() - 1) * d);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto cells = detail::split(detail::trim(lines[r]), delim);
        if (cells.size() != d) {
            throw ValidationError("row " + std::to_string(r) + ": expected " + std::to_string(d) + " cells, found " +
                                  std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < d; ++c) {
            const auto v = detail::parse_double(cells[c]);
            if (!v) {
                throw ValidationError("row " + std::to_string(r) + ", column " + std::to_string(c + 1) + " ('" +
                                      out.attribute_names[c] + "'): cannot parse '" + std::string(cells[c]) + "'");
            }
            if (!std::isfinite(*v)) {
                throw ValidationError("row " + std::to_string(r) + ", column " + std::to_string(c + 1) + " ('" +
                                      out.attribute_names[c] + "'): non-finite value");
            }
            values.push_back(*v);
        }
        out.row_ids.push_back(std::to_string(r - 1));
    }
    out.points = Matrix(lines.size() - 1, d, std::move(values));
    out.validate();
    return out;
}

inline Dataset load_dataset(const std::filesystem::path& path, std::optional<TableFormat> format = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_dataset(buffer.str(), format.value_or(format_for(path)));
}

inline std::string format_dataset(const Dataset& data) {
    std::string out;
    for (std::size_t c = 0; c < data.dims(); ++c) {
        out += (c ? "\t" : "") + data.attribute_names[c];
    }
    out += '\n';
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t c = 0; c < data.dims(); ++c) {
            if (c) {
                out += '\t';
            }
            detail::append_double(out, data.points(r, c));
        }
        out += '\n';
    }
    return out;
}

/// Writes canonical TSV (tab, header, LF). Output is always TSV.
inline void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    detail::write_text(path, format_dataset(data));
}

/// Column selector for label files: a header name or a 0-based index.
using LabelColumn = std::variant<std::string, std::size_t>;

/// Raw string cells of one column of a delimited file.
inline std::vector<std::string> read_column(const std::filesystem::path& path, const LabelColumn& column,
                                            bool has_header) {
    const auto lines = detail::read_lines(path);
    if (lines.empty() || (has_header && lines.size() == 1)) {
        throw ValidationError("label file '" + path.string() + "' is empty");
    }
    const char delim = format_for(path) == TableFormat::csv ? ',' : '\t';
    std::size_t index = 0;
    if (const auto* name = std::get_if<std::string>(&column)) {
        require(has_header, "a named label column needs a header row");
        const auto header = detail::split(detail::trim(lines[0]), delim);
        const auto it = std::find_if(header.begin(), header.end(),
                                     [&](std::string_view h) { return detail::trim(h) == *name; });
        require(it != header.end(), "label column '" + *name + "' not found in '" + path.string() + "'");
        index = static_cast<std::size_t>(it - header.begin());
    } else {
        index = std::get<std::size_t>(column);
    }
    std::vector<std::string> values;
    for (std::size_t r = has_header ? 1 : 0; r < lines.size(); ++r) {
        const auto cells = detail::split(detail::trim(lines[r]), delim);
        require(index < cells.size(), "line " + std::to_string(r + 1) + " of '" + path.string() + "' has no column " +
                                          std::to_string(index));
        values.emplace_back(detail::trim(cells[index]));
    }
    return values;
}

/**
 * Loads one label set. `expected_rows`, when given, is the dataset's n and a
 * different row count is an error.
 */
inline LabelVector load_labels(const std::filesystem::path& path, const LabelColumn& column = std::size_t{0},
                               bool has_header = true, std::optional<std::size_t> expected_rows = std::nullopt) {
    const auto values = read_column(path, column, has_header);
    if (expected_rows && values.size() != *expected_rows) {
        throw ValidationError("label file '" + path.string() + "' has " + std::to_string(values.size()) +
                              " rows but the dataset has " + std::to_string(*expected_rows));
    }
    return LabelVector::encode(values);
}

inline void save_labels(const LabelVector& labels, const std::filesystem::path& path,
                        const std::string& header = "label") {
    std::string out = header + "\n";
    for (auto l : labels.labels()) {
        out += std::to_string(l) + "\n";
    }
    detail::write_text(path, out);
}

inline std::string format_embedding(const EmbeddingMatrix& y) {
    std::string out;
    for (std::size_t r = 0; r < y.size(); ++r) {
        for (std::size_t c = 0; c < y.dims(); ++c) {
            if (c) {
                out += '\t';
            }
            detail::append_double(out, y.coords(r, c));
        }
        out += '\n';
    }
    return out;
}

/// Embedding files are headerless TSV with 17 significant digits.
inline void save_embedding(const EmbeddingMatrix& y, const std::filesystem::path& path) {
    detail::write_text(path, format_embedding(y));
}

inline EmbeddingMatrix load_embedding(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    require(!lines.empty(), "embedding file '" + path.string() + "' is empty");
    const std::size_t cols = detail::split(detail::trim(lines[0]), '\t').size();
    std::vector<double> values;
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto cells = detail::split(detail::trim(lines[r]), '\t');
        require(cells.size() == cols, "embedding row " + std::to_string(r + 1) + " has the wrong number of cells");
        for (auto cell : cells) {
            const auto v = detail::parse_double(cell);
            require(v && std::isfinite(*v), "embedding row " + std::to_string(r + 1) + ": bad value '" +
                                                std::string(cell) + "'");
            values.push_back(*v);
        }
    }
    return {Matrix(lines.size(), cols, std::move(values))};
}

/// Sidecar path convention: `<output>.meta.json`.
inline std::filesystem::path metadata_path(const std::filesystem::path& output) {
    return output.string() + ".meta.json";
}

inline void save_metadata(const RunMetadata& meta, const std::filesystem::path& output) {
    detail::write_text(metadata_path(output), meta.to_json().dump(2) + "\n");
}

} // namespace ctsne

#endif
