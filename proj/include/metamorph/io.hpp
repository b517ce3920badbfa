#pragma once

#include "metamorph/shapespace.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace metamorph {

using Json = nlohmann::json;

inline constexpr const char* kDesignSchema = "metamorph-design/1";
inline constexpr const char* kStateSchema = "metamorph-state/1";
inline constexpr const char* kGraphSchema = "metamorph-graph/1";

Json design_to_json(const DesignSpec& d);
DesignSpec design_from_json(const Json& j);

// Angles in degrees rounded to six decimals; centers are integers on
// lattice states.
Json state_to_json(const FoldState& q, const ShapeMatrix* m = nullptr);
FoldState state_from_json(const Json& j);

// Edge paths keep only the active hinges per state; the rest are taken
// from the edge's first endpoint.
Json graph_to_json(const TransitionGraph& g, const DesignSpec& d);
TransitionGraph graph_from_json(const Json& j, DesignSpec* design = nullptr);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);
Json read_json(const std::string& path);

// A design file path, or one of the built-in names canonical, ring8 and
// level1-<n>.
DesignSpec load_design(const std::string& path_or_name);

}  // namespace metamorph
