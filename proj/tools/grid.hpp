#pragma once

#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace hpix::cli {

// One row of equally sized RGB panels.
using GridRow = std::vector<cv::Mat>;

struct GridLayout {
  int rows = 0;
  int columns = 0;
  int panel = 0;     // panel side in pixels
  int caption = 0;   // caption band height
  int gap = 0;
};

// Panels are laid out row-major under a caption band naming each column.
// Throws ShapeError when panels differ in size or rows differ in length.
cv::Mat compose_grid(const std::vector<GridRow>& rows, const std::vector<std::string>& captions,
                     GridLayout* layout = nullptr);

}  // namespace hpix::cli
