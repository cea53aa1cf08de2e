#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "bsda/frame_prep.hpp"

namespace bsda {
namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!tok.empty()) break;
    } else {
      tok.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  return tok;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = header_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used == tok.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw Error("malformed PNM header in " + path.string());
}

}  // namespace

Frame read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open image " + path.string());
  const std::string magic = header_token(in);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw Error("unsupported image format '" + magic + "' in " + path.string() + " (binary P5/P6 only)");
  }
  const int w = header_int(in, path);
  const int h = header_int(in, path);
  const int maxval = header_int(in, path);
  if (maxval != 255) throw Error("only maxval 255 is supported: " + path.string());

  Frame f(w, h, channels);
  in.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(f.pixels.size()))
    throw Error("truncated pixel data in " + path.string());
  return f;
}

void write_pnm(const Frame& f, const std::filesystem::path& path) {
  if (f.channels != 1 && f.channels != 3) throw Error("PNM output needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image " + path.string());
  out << (f.channels == 1 ? "P5" : "P6") << '\n' << f.width << ' ' << f.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace bsda
