#include "cyberduel/class_pool.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace cyberduel {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<UnitClass> parse_class_pool(const std::string& text) {
  std::vector<UnitClass> pool;
  std::set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int i = 0; i < 4; ++i) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        start = line.size() + 1;
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (start <= line.size()) fields.push_back(line.substr(start));
    const auto where = "class pool line " + std::to_string(lineno);
    if (fields.size() < 4) throw Error(where + ": expected class_id,name,port,vuln_key");
    UnitClass c;
    c.class_id = trim(fields[0]);
    c.name = trim(fields[1]);
    const auto port_text = trim(fields[2]);
    c.vuln_key = trim(fields[3]);
    if (fields.size() > 4) c.description = trim(fields[4]);
    unsigned port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port < 1024 || port > 65535)
      throw Error(where + ": port must be an integer in [1024, 65535]");
    c.service_port = static_cast<std::uint16_t>(port);
    if (c.class_id.empty()) throw Error(where + ": empty class_id");
    if (c.vuln_key.empty()) throw Error(where + ": empty vuln_key");
    if (!ids.insert(c.class_id).second) throw Error(where + ": duplicate class_id " + c.class_id);
    pool.push_back(std::move(c));
  }
  return pool;
}

std::vector<UnitClass> load_class_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open class pool " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_class_pool(ss.str());
}

std::string format_class_pool(const std::vector<UnitClass>& pool) {
  std::ostringstream out;
  out << "# class_id,name,port,vuln_key,description\n";
  for (const auto& c : pool)
    out << c.class_id << ',' << c.name << ',' << c.service_port << ',' << c.vuln_key << ','
        << c.description << '\n';
  return out.str();
}

}  // namespace cyberduel
