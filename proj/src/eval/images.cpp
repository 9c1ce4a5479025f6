#include <algorithm>
#include <cmath>
#include <fstream>

#include "stinpaint/eval/eval.hpp"

namespace stinpaint {
namespace {

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

std::ofstream open_binary(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path);
  return out;
}

}  // namespace

// Linear red-white-blue: +max is pure red, 0 white, -max pure blue.
void write_error_ppm(std::ostream& out, const ErrorMap& map) {
  const double range = map.value.cwiseAbs().maxCoeff();
  out << "P6\n" << map.value.cols() << ' ' << map.value.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < map.value.rows(); ++r)
    for (Eigen::Index c = 0; c < map.value.cols(); ++c) {
      const double s = range > 0.0 ? map.value(r, c) / range : 0.0;
      unsigned char px[3];
      if (s >= 0.0) {
        px[0] = 255;
        px[1] = px[2] = to_byte(1.0 - s);
      } else {
        px[0] = px[1] = to_byte(1.0 + s);
        px[2] = 255;
      }
      out.write(reinterpret_cast<const char*>(px), 3);
    }
}

void write_error_ppm(const std::string& path, const ErrorMap& map) {
  auto out = open_binary(path);
  write_error_ppm(out, map);
}

void write_heatmap_pgm(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& frame, double max_value) {
  out << "P5\n" << frame.cols() << ' ' << frame.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < frame.rows(); ++r)
    for (Eigen::Index c = 0; c < frame.cols(); ++c) {
      const unsigned char px = max_value > 0.0 ? to_byte(frame(r, c) / max_value) : 0;
      out.put(static_cast<char>(px));
    }
}

void write_heatmap_pgm(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& frame, double max_value) {
  auto out = open_binary(path);
  write_heatmap_pgm(out, frame, max_value);
}

}  // namespace stinpaint
