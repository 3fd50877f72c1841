#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stackgame {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace stackgame
