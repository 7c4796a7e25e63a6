#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cyberduel/core_model.hpp"

namespace cyberduel {

// Class pool files are line oriented:
//
//   # comment
//   class_id,name,port,vuln_key[,description]
//
// Blank lines and lines starting with '#' are ignored. Description may contain
// commas; everything after the fourth comma belongs to it.
std::vector<UnitClass> parse_class_pool(const std::string& text);
std::vector<UnitClass> load_class_pool(const std::filesystem::path& path);
std::string format_class_pool(const std::vector<UnitClass>& pool);

}  // namespace cyberduel
