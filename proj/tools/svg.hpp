// Copyright 2026 The vmrtk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal SVG canvas: rect, line and text primitives are all the figures
// need. Coordinates are formatted with fixed precision so output bytes are
// reproducible.

#include <cstdio>
#include <string>

namespace svg {

inline std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(double width, double height) : width_(width), height_(height) {
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
             num(width) + "\" height=\"" + num(height) + "\" viewBox=\"0 0 " +
             num(width) + " " + num(height) + "\">\n";
    rect(0, 0, width, height, "#ffffff");
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "", double opacity = 1.0) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
             num(w) + "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"";
    if (!stroke.empty())
      body_ += " stroke=\"" + stroke + "\" stroke-width=\"1\"";
    if (opacity != 1.0) body_ += " fill-opacity=\"" + num(opacity) + "\"";
    body_ += "/>\n";
  }

  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double width = 1.0,
            bool dashed = false) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" +
             num(x2) + "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke +
             "\" stroke-width=\"" + num(width) + "\"";
    if (dashed) body_ += " stroke-dasharray=\"4 3\"";
    body_ += "/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& fill = "#222222",
            const std::string& anchor = "start") {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) +
             "\" font-family=\"sans-serif\" font-size=\"" + num(size) +
             "\" fill=\"" + fill + "\" text-anchor=\"" + anchor + "\">" +
             escape(s) + "</text>\n";
  }

  double width() const { return width_; }
  double height() const { return height_; }

  std::string str() const { return body_ + "</svg>\n"; }

 private:
  double width_;
  double height_;
  std::string body_;
};

}  // namespace svg
