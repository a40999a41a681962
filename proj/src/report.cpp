#include "isohom/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace isohom {

std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // Keep the value typed as floating point when read back.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

void emit(std::ostringstream& out, const nlohmann::ordered_json& j, int depth) {
  const std::string pad(2 * static_cast<size_t>(depth + 1), ' ');
  const std::string close(2 * static_cast<size_t>(depth), ' ');
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out << ",\n";
        first = false;
        out << pad << nlohmann::ordered_json(key).dump() << ": ";
        emit(out, value, depth + 1);
      }
      out << "\n" << close << "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      bool scalar = true;
      for (const auto& e : j) scalar = scalar && !e.is_structured();
      if (scalar) {
        out << "[";
        for (size_t i = 0; i < j.size(); ++i) {
          if (i) out << ", ";
          emit(out, j[i], depth + 1);
        }
        out << "]";
        return;
      }
      out << "[\n";
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) out << ",\n";
        out << pad;
        emit(out, j[i], depth + 1);
      }
      out << "\n" << close << "]";
      return;
    }
    case nlohmann::json::value_t::number_float:
      out << format_double(j.get<double>());
      return;
    default:
      out << j.dump();
      return;
  }
}

}  // namespace

std::string dump_json(const nlohmann::ordered_json& j) {
  std::ostringstream out;
  emit(out, j, 0);
  out << "\n";
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

std::string bloch_csv(const BlochSweep& sweep) {
  std::string s = "k1,k2,lambda\n";
  for (const auto& e : sweep.samples)
    s += format_double(e.k(0)) + "," + format_double(e.k(1)) + "," + format_double(e.lambda_k) + "\n";
  return s;
}

std::string fraction_csv(const std::vector<FractionSample>& samples) {
  std::string s = "theta,min_rank_one,argmin_angle_a,argmin_angle_b\n";
  for (const auto& e : samples)
    s += format_double(e.theta) + "," + format_double(e.ellipticity.min_value) + "," +
         format_double(e.ellipticity.argmin.angle_a()) + "," + format_double(e.ellipticity.argmin.angle_b()) + "\n";
  return s;
}

}  // namespace isohom
