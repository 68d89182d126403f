#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ctxplain/error.hpp"
#include "ctxplain/rng.hpp"

namespace ctx {

struct manifest_entry {
    std::string path;
    int label = 0;
    std::string source;  // originating volume or generator, free-form
    std::string split;   // empty until assigned: "train", "val" or "test"
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"' && cur.empty()) {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

inline const char* manifest_header = "path,label,source,split";

inline std::vector<manifest_entry> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open manifest " + path);
    std::string line;
    if (!std::getline(f, line)) throw io_error("manifest " + path + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != manifest_header)
        throw io_error("manifest " + path + " has header \"" + line + "\", expected \"" +
                       manifest_header + "\"");
    std::vector<manifest_entry> out;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 4)
            throw io_error("manifest " + path + " line " + std::to_string(lineno) + " has " +
                           std::to_string(fields.size()) + " fields, expected 4");
        manifest_entry e;
        e.path = fields[0];
        if (fields[1] != "0" && fields[1] != "1")
            throw io_error("manifest " + path + " line " + std::to_string(lineno) +
                           ": label must be 0 or 1, got \"" + fields[1] + "\"");
        e.label = fields[1] == "1" ? 1 : 0;
        e.source = fields[2];
        e.split = fields[3];
        out.push_back(std::move(e));
    }
    return out;
}

inline void write_manifest(const std::string& path, const std::vector<manifest_entry>& entries) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open manifest " + path + " for writing");
    f << manifest_header << "\n";
    for (const auto& e : entries)
        f << detail::csv_field(e.path) << "," << e.label << "," << detail::csv_field(e.source)
          << "," << detail::csv_field(e.split) << "\n";
    if (!f) throw io_error("short write to manifest " + path);
}

struct split_fractions {
    double train = 0.8;
    double val = 0.1;  // test takes the remainder
};

// Assigns train/val/test in place, stratified by label: each class is
// shuffled with its own derived seed and cut at lround(m * train) and
// lround(m * (train + val)), so class balance is preserved up to rounding.
inline void split_manifest(std::vector<manifest_entry>& entries, std::uint64_t seed,
                           split_fractions frac = {}) {
    if (entries.size() < 10)
        throw too_few_samples("need at least 10 samples to split, got " +
                              std::to_string(entries.size()));
    if (!(frac.train > 0.0) || !(frac.val > 0.0) || frac.train + frac.val >= 1.0)
        throw error("split fractions must be positive and sum to less than 1");
    for (int label : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].label == label) idx.push_back(i);
        if (idx.empty())
            throw one_class_only("all samples carry label " + std::to_string(1 - label) +
                                 "; a stratified split needs both classes");
        rng64 rng(derive_seed(seed, label ? "split.pos" : "split.neg"));
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.below(i)]);
        const auto m = static_cast<double>(idx.size());
        const auto n_train = static_cast<std::size_t>(std::lround(m * frac.train));
        const auto n_val =
            static_cast<std::size_t>(std::lround(m * (frac.train + frac.val))) - n_train;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto& e = entries[idx[k]];
            e.split = k < n_train ? "train" : (k < n_train + n_val ? "val" : "test");
        }
    }
}

}  // namespace ctx
