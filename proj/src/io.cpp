#include "mfl/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "mfl/core.hpp"
#include "mfl/matrix.hpp"

namespace mfl {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string& s, const std::string& context) {
  if (s.empty()) throw std::runtime_error(context + ": empty numeric field");
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size())
    throw std::runtime_error(context + ": bad numeric field '" + s + "'");
  return v;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".json");
  return p;
}

void checkpoint_write(const ParticleSystem& s, const std::filesystem::path& csv_path) {
  s.validate();
  Matrix m(s.size(), s.particles.front().dim());
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = s.particles[i].coords[j];
  matrix_write_csv(m, csv_path);

  nlohmann::json side;
  side["R"] = s.output_bound;
  side["input_dim"] = s.input_dim();
  side["provenance"] = s.provenance;
  write_text_file(sidecar_path(csv_path), side.dump(2) + "\n");
}

ParticleSystem checkpoint_read(const std::filesystem::path& csv_path) {
  const Matrix m = matrix_read_csv(csv_path);
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(read_text_file(sidecar_path(csv_path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(sidecar_path(csv_path).string() + ": " + e.what());
  }

  ParticleSystem s;
  s.output_bound = side.at("R").get<double>();
  s.provenance = side.value("provenance", "");
  const std::size_t input_dim = side.at("input_dim").get<std::size_t>();
  if (m.cols != input_dim + 2)
    throw std::runtime_error(csv_path.string() + ": " + std::to_string(m.cols) +
                             " columns inconsistent with input_dim " + std::to_string(input_dim));
  s.particles.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    Particle p(input_dim);
    for (std::size_t j = 0; j < m.cols; ++j) p.coords[j] = m(i, j);
    s.particles.push_back(std::move(p));
  }
  s.validate();
  return s;
}

}  // namespace mfl
