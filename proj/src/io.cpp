#include "fmcf/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fmcf {

std::string format_value(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void CsvWriter::add_row(const std::vector<double>& row) {
    if (row.size() != header_.size())
        throw std::invalid_argument("csv row width does not match header");
    rows_.push_back(row);
}

void CsvWriter::write(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    for (std::size_t k = 0; k < header_.size(); ++k)
        os << header_[k] << (k + 1 < header_.size() ? "," : "\n");
    for (const auto& row : rows_) {
        for (std::size_t k = 0; k < row.size(); ++k)
            os << format_value(row[k]) << (k + 1 < row.size() ? "," : "\n");
    }
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::uint64_t h = 0xCBF29CE484222325ULL;
    char buf[8192];
    while (is) {
        is.read(buf, sizeof(buf));
        std::streamsize n = is.gcount();
        for (std::streamsize k = 0; k < n; ++k) {
            h ^= static_cast<unsigned char>(buf[k]);
            h *= 0x100000001B3ULL;
        }
    }
    char out[20];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(is), {});
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

namespace {
std::string iso_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    return buf;
}
} // namespace

RunManifest::RunManifest(std::string subcommand, std::uint64_t master_seed) {
    j_["artifact_version"] = "0.1.0";
    j_["subcommand"] = std::move(subcommand);
    j_["master_seed"] = master_seed;
    j_["started"] = iso_now();
}

void RunManifest::set_config(const ordered_json& resolved) { j_["config"] = resolved; }

void RunManifest::add_task_seed(const std::string& task, std::uint64_t seed) {
    task_seeds_[task] = seed;
}

void RunManifest::add_output(const std::filesystem::path& path) {
    ordered_json o;
    o["path"] = path.filename().string();
    o["fnv1a64"] = file_digest(path);
    outputs_.push_back(o);
}

void RunManifest::finish() { j_["finished"] = iso_now(); }

ordered_json RunManifest::to_json() const {
    ordered_json out = j_;
    out["task_seeds"] = task_seeds_;
    out["outputs"] = outputs_;
    return out;
}

void RunManifest::write(const std::filesystem::path& path) const {
    write_json(path, to_json());
}

} // namespace fmcf
