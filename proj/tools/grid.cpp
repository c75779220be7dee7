#include "grid.hpp"

#include <opencv2/imgproc.hpp>

#include "hpix/error.hpp"

namespace hpix::cli {

cv::Mat compose_grid(const std::vector<GridRow>& rows, const std::vector<std::string>& captions,
                     GridLayout* layout) {
  if (rows.empty() || rows.front().empty()) throw InputError("comparison grid has no panels");
  const cv::Size panel = rows.front().front().size();
  if (panel.width != panel.height) throw ShapeError("comparison panels must be square");
  const int cols = static_cast<int>(rows.front().size());
  if (static_cast<int>(captions.size()) != cols) {
    throw ShapeError("comparison grid needs one caption per column");
  }
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != cols) throw ShapeError("comparison rows differ in length");
    for (const auto& p : row) {
      if (p.size() != panel || p.type() != CV_8UC3) {
        throw ShapeError("comparison panels must share one size and be 8-bit RGB");
      }
    }
  }

  GridLayout g;
  g.rows = static_cast<int>(rows.size());
  g.columns = cols;
  g.panel = panel.width;
  g.caption = 24;
  g.gap = 4;
  const int width = cols * g.panel + (cols + 1) * g.gap;
  const int height = g.caption + g.rows * g.panel + (g.rows + 1) * g.gap;
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

  for (int c = 0; c < cols; ++c) {
    const int x = g.gap + c * (g.panel + g.gap);
    double scale = 0.5;
    int baseline = 0;
    cv::Size text = cv::getTextSize(captions[c], cv::FONT_HERSHEY_SIMPLEX, scale, 1, &baseline);
    while (text.width > g.panel && scale > 0.25) {
      scale -= 0.05;
      text = cv::getTextSize(captions[c], cv::FONT_HERSHEY_SIMPLEX, scale, 1, &baseline);
    }
    cv::putText(canvas, captions[c], {x + std::max(0, (g.panel - text.width) / 2), g.caption - 7},
                cv::FONT_HERSHEY_SIMPLEX, scale, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    for (int r = 0; r < g.rows; ++r) {
      const int y = g.caption + g.gap + r * (g.panel + g.gap);
      rows[r][c].copyTo(canvas(cv::Rect(x, y, g.panel, g.panel)));
    }
  }
  if (layout != nullptr) *layout = g;
  return canvas;
}

}  // namespace hpix::cli
