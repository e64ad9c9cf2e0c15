#include "scpm/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace scpm {
namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw ParseError(fmt::format("{}:{}: {}", source, line, what));
}

double parse_number(std::string_view field, const std::string& source, std::size_t line,
                    std::string_view column) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(source, line, fmt::format("invalid {} value '{}'", column, field));
  }
  return v;
}

// Calls `row(fields, line_no)` for every non-empty data line after checking
// the header.
template <class RowFn>
void parse_csv(std::istream& in, const std::string& source, std::string_view header,
               std::size_t columns, RowFn&& row) {
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (!seen_header) {
      if (text != header) fail(source, line_no, fmt::format("expected header '{}'", header));
      seen_header = true;
      continue;
    }
    const auto fields = split_fields(text);
    if (fields.size() != columns) {
      fail(source, line_no, fmt::format("expected {} fields, found {}", columns, fields.size()));
    }
    if (fields[0].empty()) fail(source, line_no, "empty seriesuid");
    row(fields, line_no);
  }
  // A file with no lines at all is an empty table.
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

void append_f32le(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

double read_f32le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

std::string format_double(double v) { return fmt::format("{}", v); }

AnnotationTable parse_annotations_csv(std::istream& in, const std::string& source) {
  AnnotationTable table;
  parse_csv(in, source, kAnnotationHeader, 5, [&](const auto& f, std::size_t line) {
    const double x = parse_number(f[1], source, line, "coordX");
    const double y = parse_number(f[2], source, line, "coordY");
    const double z = parse_number(f[3], source, line, "coordZ");
    const double diameter = parse_number(f[4], source, line, "diameter_mm");
    if (!(diameter > 0.0)) fail(source, line, "diameter_mm must be positive");
    auto& nodules = table[std::string(f[0])];
    nodules.push_back({fmt::format("{}#{}", f[0], nodules.size()), {x, y, z}, diameter / 2.0});
  });
  return table;
}

AnnotationTable read_annotations_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_annotations_csv(in, path.string());
}

std::string annotations_csv(const AnnotationTable& table) {
  std::string out(kAnnotationHeader);
  out += '\n';
  for (const auto& [scan, nodules] : table) {
    for (const NoduleAnnotation& n : nodules) {
      out += fmt::format("{},{},{},{},{}\n", scan, format_double(n.center.x),
                         format_double(n.center.y), format_double(n.center.z),
                         format_double(2.0 * n.radius));
    }
  }
  return out;
}

CandidateTable parse_candidates_csv(std::istream& in, const std::string& source) {
  CandidateTable table;
  parse_csv(in, source, kCandidateHeader, 6, [&](const auto& f, std::size_t line) {
    Candidate c;
    c.sphere.center = {parse_number(f[1], source, line, "coordX"),
                       parse_number(f[2], source, line, "coordY"),
                       parse_number(f[3], source, line, "coordZ")};
    c.sphere.radius = parse_number(f[4], source, line, "radius");
    c.score = parse_number(f[5], source, line, "probability");
    if (!(c.sphere.radius > 0.0)) fail(source, line, "radius must be positive");
    if (c.score < 0.0 || c.score > 1.0) fail(source, line, "probability outside [0, 1]");
    table[std::string(f[0])].push_back(c);
  });
  return table;
}

CandidateTable read_candidates_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_candidates_csv(in, path.string());
}

std::string candidates_csv(const CandidateTable& table) {
  std::string out(kCandidateHeader);
  out += '\n';
  for (const auto& [scan, cands] : table) {
    std::vector<Candidate> sorted(cands);
    sort_candidates(sorted);
    for (const Candidate& c : sorted) {
      out += fmt::format("{},{},{},{},{},{}\n", scan, format_double(c.sphere.center.x),
                         format_double(c.sphere.center.y), format_double(c.sphere.center.z),
                         format_double(c.sphere.radius), format_double(c.score));
    }
  }
  return out;
}

std::string encode_grid(const PredictionGrid& grid, const std::string& scan_id) {
  grid.validate();
  json header{{"dims", {grid.spec.dims.depth, grid.spec.dims.height, grid.spec.dims.width}},
              {"stride", grid.spec.stride},
              {"level", grid.level},
              {"dtype", "f32le"}};
  if (!scan_id.empty()) header["scan_id"] = scan_id;

  std::string out(kGridMagic);
  out += '\n';
  out += header.dump();
  out += '\n';
  const std::size_t n = grid.spec.cell_count();
  out.reserve(out.size() + n * 5 * 4);
  for (double v : grid.center_prob) append_f32le(out, v);
  for (double v : grid.radius) append_f32le(out, v);
  for (const Vec3& v : grid.offset) append_f32le(out, v.x);
  for (const Vec3& v : grid.offset) append_f32le(out, v.y);
  for (const Vec3& v : grid.offset) append_f32le(out, v.z);
  return out;
}

GridFile decode_grid(std::string_view bytes, const std::string& source) {
  auto bad = [&](const std::string& what) -> ParseError {
    return ParseError(fmt::format("{}: {}", source, what));
  };
  const std::string magic_line = std::string(kGridMagic) + '\n';
  if (bytes.substr(0, magic_line.size()) != magic_line) throw bad("missing SCPMGRID1 magic");
  const std::size_t header_start = magic_line.size();
  const std::size_t header_end = bytes.find('\n', header_start);
  if (header_end == std::string_view::npos) throw bad("unterminated header");

  GridFile out;
  PredictionGrid& grid = out.grid;
  try {
    const json header = json::parse(bytes.substr(header_start, header_end - header_start));
    if (header.at("dtype").get<std::string>() != "f32le") throw bad("unsupported dtype");
    const auto dims = header.at("dims").get<std::vector<int>>();
    if (dims.size() != 3) throw bad("dims must have three entries");
    grid.spec = {{dims[0], dims[1], dims[2]}, header.at("stride").get<int>()};
    grid.level = header.value("level", 1);
    out.scan_id = header.value("scan_id", std::string{});
  } catch (const json::exception& e) {
    throw bad(std::string("bad header: ") + e.what());
  }
  try {
    grid.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw bad(e.what());
  }

  const std::size_t n = grid.spec.cell_count();
  const std::string_view payload = bytes.substr(header_end + 1);
  if (payload.size() != n * 5 * 4) {
    throw bad(fmt::format("payload has {} bytes, dims require {}", payload.size(), n * 5 * 4));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  auto channel = [&](std::size_t k, std::size_t i) { return read_f32le(p + 4 * (k * n + i)); };
  grid.center_prob.resize(n);
  grid.radius.resize(n);
  grid.offset.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid.center_prob[i] = channel(0, i);
    grid.radius[i] = channel(1, i);
    grid.offset[i] = {channel(2, i), channel(3, i), channel(4, i)};
  }
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw bad(e.what());
  }
  return out;
}

GridFile read_grid_file(const std::filesystem::path& path) {
  return decode_grid(read_file(path), path.string());
}

void write_grid_file(const std::filesystem::path& path, const PredictionGrid& grid,
                     const std::string& scan_id) {
  write_file_atomic(path, encode_grid(grid, scan_id));
}

std::vector<double> read_loss_map(const std::filesystem::path& path, const GridDims& expected) {
  json doc;
  try {
    doc = json::parse(read_file(path));
    const auto dims = doc.at("dims").get<std::vector<int>>();
    if (dims.size() != 3 || GridDims{dims[0], dims[1], dims[2]} != expected) {
      throw ParseError(path.string() + ": loss map dims do not match the grid");
    }
    auto values = doc.at("values").get<std::vector<double>>();
    const std::size_t n = static_cast<std::size_t>(expected.depth) * expected.height * expected.width;
    if (values.size() != n) {
      throw ParseError(fmt::format("{}: expected {} values, found {}", path.string(), n,
                                   values.size()));
    }
    return values;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace scpm
