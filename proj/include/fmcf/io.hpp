#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace fmcf {

using ordered_json = nlohmann::ordered_json;

/// Format a double with full round-trip precision; infinities become "inf".
std::string format_value(double v);

/// One CSV table: header row, UTF-8, '.' decimal, "inf" sentinel.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}
    void add_row(const std::vector<double>& row);
    void write(const std::filesystem::path& path) const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

/// FNV-1a 64-bit digest of a file's bytes, as a hex string.
std::string file_digest(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const ordered_json& j);

/// Reproducibility record for one CLI run. Replaying the embedded resolved
/// config reproduces every referenced output byte-for-byte (the manifest
/// itself differs only in its wall-time fields).
class RunManifest {
public:
    RunManifest(std::string subcommand, std::uint64_t master_seed);

    void set_config(const ordered_json& resolved);
    void add_task_seed(const std::string& task, std::uint64_t seed);
    void add_output(const std::filesystem::path& path);
    void finish();

    ordered_json to_json() const;
    void write(const std::filesystem::path& path) const;

private:
    ordered_json j_;
    ordered_json outputs_ = ordered_json::array();
    ordered_json task_seeds_ = ordered_json::object();
};

} // namespace fmcf
