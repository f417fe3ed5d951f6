#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace mfl {

struct ParticleSystem;

// Shortest round-trip decimal form of x (printf %.17g).
std::string fmt_double(double x);

// Parses a full double, rejecting trailing junk and empty fields.
double parse_double(const std::string& s, const std::string& context);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Splits one CSV line on commas. No quoting: none of our formats needs it.
std::vector<std::string> split_csv_line(const std::string& line);

// Particle-system checkpoint: an N x (input_dim + 2) matrix CSV plus a JSON
// sidecar (same stem, .json) holding R, input_dim, and provenance.
void checkpoint_write(const ParticleSystem& s, const std::filesystem::path& csv_path);
ParticleSystem checkpoint_read(const std::filesystem::path& csv_path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace mfl
