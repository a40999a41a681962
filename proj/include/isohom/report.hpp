// Report serialization with a byte-stable layout: object keys keep insertion
// order, floats are printed with 17 significant digits, indentation is two
// spaces and lines end with LF only.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "isohom/coercivity.hpp"
#include "isohom/laminate.hpp"

namespace isohom {

inline constexpr int kSchemaVersion = 1;

std::string format_double(double x);
std::string dump_json(const nlohmann::ordered_json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

// Header "k1,k2,lambda".
std::string bloch_csv(const BlochSweep& sweep);
// Header "theta,min_rank_one,argmin_angle_a,argmin_angle_b".
std::string fraction_csv(const std::vector<FractionSample>& samples);

}  // namespace isohom
