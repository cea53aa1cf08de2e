#pragma once

// MOT-challenge style CSV: frame,id,x,y,w,h,conf,class,visibility
// (1-based frames, id = -1 for raw detections).

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bsda/tracker.hpp"

namespace bsda {

struct MotRow {
  int frame = 0;
  int id = -1;
  BBox bbox;
  double conf = 1.0;
  int class_id = 0;
  double visibility = -1.0;

  friend bool operator==(const MotRow&, const MotRow&) = default;
};

/// Parses rows; malformed input throws an Error naming the 1-based line.
std::vector<MotRow> parse_mot_csv(std::istream& in);
std::vector<MotRow> read_mot_csv(const std::filesystem::path& path);

void write_mot_csv(std::ostream& out, const std::vector<MotRow>& rows);
void write_mot_csv(const std::filesystem::path& path, const std::vector<MotRow>& rows);

/// Shortest decimal form that round-trips the double.
std::string format_number(double v);

std::vector<Detection> to_detections(const std::vector<MotRow>& rows);
std::vector<MotRow> to_rows(const std::vector<TrackOutput>& tracks);

}  // namespace bsda
