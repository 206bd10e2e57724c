#pragma once

// Deterministic artifact output: shortest round-trip number formatting,
// CSV assembly, atomic file replacement, and pulse-sequence documents.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include "darkstate/config.hpp"

namespace darkstate {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

class CsvTable {
   public:
    explicit CsvTable(const std::vector<std::string> &header) : columns_(header.size()) { add_row(header); }

    CsvTable &row() {
        pending_.clear();
        return *this;
    }
    CsvTable &operator<<(double x) { return cell(format_double(x)); }
    CsvTable &operator<<(int x) { return cell(std::to_string(x)); }
    CsvTable &operator<<(std::size_t x) { return cell(std::to_string(x)); }
    CsvTable &operator<<(const std::string &s) { return cell(s); }

    void end_row() {
        if (pending_.size() != columns_) throw Error(ErrorKind::InvalidArgument, "CSV row has wrong width");
        add_row(pending_);
        pending_.clear();
    }

    const std::string &str() const { return text_; }

   private:
    CsvTable &cell(std::string s) {
        pending_.push_back(std::move(s));
        return *this;
    }

    void add_row(const std::vector<std::string> &cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) text_ += ',';
            text_ += cells[k];
        }
        text_ += '\n';
    }

    std::size_t columns_;
    std::vector<std::string> pending_;
    std::string text_;
};

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw std::runtime_error("cannot rename onto '" + path.string() + "': " + ec.message());
}

inline std::string dump_json(const json &doc) { return doc.dump(2) + "\n"; }

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json field_json(const FieldParams &fp) {
    return {{"theta", fp.theta}, {"phi", fp.phi}, {"mu_minus", fp.mu_minus}, {"mu_plus", fp.mu_plus}};
}

inline json sequence_json(const PulseSequence &seq) {
    json steps = json::array();
    for (const FieldParams &fp : seq.steps) steps.push_back(field_json(fp));
    return {{"mode", to_string(seq.mode)}, {"steps", steps}};
}

/// Reads the "sequence" block of an optimize result (or a bare sequence
/// document); amplitude, detuning and envelope come from `pulse`.
inline PulseSequence sequence_from_json(const json &doc, const FieldParams &pulse) {
    const json &s = doc.contains("sequence") ? doc.at("sequence") : doc;
    if (!s.is_object() || !s.contains("mode") || !s.contains("steps") || !s.at("steps").is_array())
        detail::config_error("sequence", "expected {mode, steps}");
    PulseSequence seq;
    seq.mode = detail::parse_mode(s.at("mode"), "sequence.mode");
    for (std::size_t k = 0; k < s.at("steps").size(); ++k) {
        const std::string p = "sequence.steps[" + std::to_string(k) + "]";
        const json &j = s.at("steps")[k];
        detail::reject_unknown(j, p, {"theta", "phi", "mu_minus", "mu_plus"});
        FieldParams fp = pulse;
        for (const char *key : {"theta", "phi", "mu_minus", "mu_plus"})
            if (!j.contains(key)) detail::config_error(detail::join(p, key), "missing");
        fp.theta = detail::get_number(j.at("theta"), p + ".theta");
        fp.phi = detail::get_number(j.at("phi"), p + ".phi");
        fp.mu_minus = detail::get_number(j.at("mu_minus"), p + ".mu_minus");
        fp.mu_plus = detail::get_number(j.at("mu_plus"), p + ".mu_plus");
        seq.steps.push_back(fp);
    }
    return seq;
}

}  // namespace darkstate
