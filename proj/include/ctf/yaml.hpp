#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

namespace ctf {

// Block-style YAML subset: nested maps, "- item" sequences, flow sequences
// [a, b, c], scalars (null/bool/int/float/string), # comments. Covers the
// method-config and search-space files; anything fancier should be JSON.
nlohmann::json parse_yaml(const std::string& text);

// Loads .json directly, anything else through the YAML subset.
nlohmann::json load_config(const std::filesystem::path& path);

}  // namespace ctf
