#include "bsda/mot_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bsda {
namespace {

double parse_field(std::string_view field, std::size_t line, int column) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw Error("malformed MOT CSV at row " + std::to_string(line) + ", column " + std::to_string(column) + ": '" +
                std::string(field) + "'");
  return v;
}

int as_int(double v, std::size_t line, int column) {
  if (v != std::floor(v) || std::abs(v) > 2e9)
    throw Error("malformed MOT CSV at row " + std::to_string(line) + ", column " + std::to_string(column) +
                ": expected an integer");
  return static_cast<int>(v);
}

}  // namespace

std::string format_number(double v) {
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::vector<MotRow> parse_mot_csv(std::istream& in) {
  std::vector<MotRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::array<double, 9> v{};
    std::size_t start = 0;
    int col = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (col >= 9) throw Error("malformed MOT CSV at row " + std::to_string(line_no) + ": more than 9 fields");
      v[static_cast<std::size_t>(col)] =
          parse_field(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start),
                      line_no, col + 1);
      ++col;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (col != 9) throw Error("malformed MOT CSV at row " + std::to_string(line_no) + ": expected 9 fields, got " + std::to_string(col));

    MotRow r;
    r.frame = as_int(v[0], line_no, 1);
    r.id = as_int(v[1], line_no, 2);
    r.bbox = {v[2], v[3], v[4], v[5]};
    r.conf = v[6];
    r.class_id = as_int(v[7], line_no, 8);
    r.visibility = v[8];
    if (r.frame < 1) throw Error("malformed MOT CSV at row " + std::to_string(line_no) + ": frame must be >= 1");
    if (!r.bbox.valid())
      throw Error("malformed MOT CSV at row " + std::to_string(line_no) + ": box width and height must be positive");
    rows.push_back(r);
  }
  return rows;
}

std::vector<MotRow> read_mot_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return parse_mot_csv(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_mot_csv(std::ostream& out, const std::vector<MotRow>& rows) {
  for (const MotRow& r : rows) {
    out << r.frame << ',' << r.id << ',' << format_number(r.bbox.x) << ',' << format_number(r.bbox.y) << ','
        << format_number(r.bbox.w) << ',' << format_number(r.bbox.h) << ',' << format_number(r.conf) << ','
        << r.class_id << ',' << format_number(r.visibility) << '\n';
  }
}

void write_mot_csv(const std::filesystem::path& path, const std::vector<MotRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_mot_csv(out, rows);
}

std::vector<Detection> to_detections(const std::vector<MotRow>& rows) {
  std::vector<Detection> dets;
  dets.reserve(rows.size());
  for (const MotRow& r : rows) {
    if (!(r.conf >= 0.0 && r.conf <= 1.0))
      throw Error("detection in frame " + std::to_string(r.frame) + " has confidence outside [0, 1]");
    dets.push_back({r.frame, r.bbox, r.conf, r.class_id, r.visibility});
  }
  return dets;
}

std::vector<MotRow> to_rows(const std::vector<TrackOutput>& tracks) {
  std::vector<MotRow> rows;
  rows.reserve(tracks.size());
  for (const TrackOutput& t : tracks) rows.push_back({t.frame, t.id, t.bbox, t.conf, t.class_id, t.visibility});
  return rows;
}

}  // namespace bsda
