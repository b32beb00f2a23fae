// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The drbml Authors

#include "drbml/corpus.hpp"
#include "drbml/error.hpp"

#include <cctype>

namespace drbml {

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_blank(std::string_view s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\r' && c != '\f' && c != '\v') return false;
  }
  return true;
}

struct LineBuffer {
  std::string text;
  bool touched = false;  // a comment was removed from this line
};

class Stripper {
public:
  explicit Stripper(std::string_view src) : src_(src) { lines_.emplace_back(); }

  StripResult run() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      const char next = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
      if (c == '/' && next == '/') {
        line_comment();
      } else if (c == '/' && next == '*') {
        block_comment();
      } else if (c == '"' && raw_string_prefix()) {
        raw_string();
      } else if (c == '"' || c == '\'') {
        literal(c);
      } else {
        emit(c);
        ++pos_;
      }
    }
    return finish();
  }

private:
  void emit(char c) {
    if (c == '\n') {
      lines_.emplace_back();
    } else {
      lines_.back().text.push_back(c);
    }
  }

  void line_comment() {
    lines_.back().touched = true;
    pos_ += 2;
    const std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
    comments_.append(src_.substr(start, pos_ - start));
    comments_.push_back('\n');
  }

  void block_comment() {
    const int open_line = static_cast<int>(lines_.size());
    lines_.back().touched = true;
    const char before = lines_.back().text.empty() ? '\0' : lines_.back().text.back();
    pos_ += 2;
    const std::size_t start = pos_;
    const std::size_t close = src_.find("*/", pos_);
    if (close == std::string_view::npos) throw UnterminatedComment(open_line);
    for (std::size_t i = start; i < close; ++i) {
      if (src_[i] == '\n') {
        lines_.emplace_back();
        lines_.back().touched = true;
      }
    }
    comments_.append(src_.substr(start, close - start));
    comments_.push_back('\n');
    pos_ = close + 2;
    // A comment separates tokens; keep identifiers from fusing.
    const char after = pos_ < src_.size() ? src_[pos_] : '\0';
    if (is_ident_char(before) && is_ident_char(after)) lines_.back().text.push_back(' ');
  }

  // Quoted literal; unterminated literals end at the next unescaped newline.
  void literal(char quote) {
    emit(quote);
    ++pos_;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\\' && pos_ + 1 < src_.size()) {
        emit(c);
        emit(src_[pos_ + 1]);
        pos_ += 2;
        continue;
      }
      if (c == '\n') return;
      emit(c);
      ++pos_;
      if (c == quote) return;
    }
  }

  bool raw_string_prefix() const {
    const std::string& text = lines_.back().text;
    if (text.empty() || text.back() != 'R') return false;
    // Accept R, LR, uR, UR, u8R; reject identifiers ending in R.
    std::size_t i = text.size() - 1;
    std::size_t begin = i;
    while (begin > 0 && is_ident_char(text[begin - 1])) --begin;
    const std::string_view prefix(text.data() + begin, i - begin);
    return prefix.empty() || prefix == "L" || prefix == "u" || prefix == "U" || prefix == "u8";
  }

  void raw_string() {
    const std::size_t open_paren = src_.find('(', pos_ + 1);
    if (open_paren == std::string_view::npos || open_paren - pos_ - 1 > 16) {
      literal('"');
      return;
    }
    const std::string delimiter(src_.substr(pos_ + 1, open_paren - pos_ - 1));
    const std::string terminator = ")" + delimiter + "\"";
    const std::size_t close = src_.find(terminator, open_paren + 1);
    const std::size_t end =
        close == std::string_view::npos ? src_.size() : close + terminator.size();
    for (std::size_t i = pos_; i < end; ++i) emit(src_[i]);
    pos_ = end;
  }

  StripResult finish() {
    // A trailing newline does not open a new line.
    const bool trailing_newline = !src_.empty() && src_.back() == '\n';
    if (trailing_newline || src_.empty()) lines_.pop_back();

    StripResult result;
    std::vector<int> targets(lines_.size(), 0);
    int next_line = 0;
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      LineBuffer& line = lines_[i];
      if (line.touched) {
        if (is_blank(line.text)) continue;
        while (!line.text.empty() && is_blank(std::string_view(&line.text.back(), 1))) {
          line.text.pop_back();
        }
      }
      // Every survivor keeps its own terminator; only the source's final
      // line can lack one.
      result.trimmed_code.append(line.text);
      if (i + 1 < lines_.size() || trailing_newline) result.trimmed_code.push_back('\n');
      targets[i] = ++next_line;
    }
    result.line_map = LineMap(std::move(targets));
    result.comments = std::move(comments_);
    return result;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<LineBuffer> lines_;
  std::string comments_;
};

}  // namespace

LineMap::LineMap(std::vector<int> targets) : targets_(std::move(targets)) {
  for (int t : targets_) {
    if (t > 0) ++trimmed_count_;
  }
}

std::optional<int> LineMap::lookup(int original_line) const {
  if (original_line < 1 || static_cast<std::size_t>(original_line) > targets_.size()) {
    return std::nullopt;
  }
  const int target = targets_[static_cast<std::size_t>(original_line) - 1];
  if (target == 0) return std::nullopt;
  return target;
}

std::vector<std::pair<int, int>> LineMap::entries() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(trimmed_count_);
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    if (targets_[i] > 0) out.emplace_back(static_cast<int>(i) + 1, targets_[i]);
  }
  return out;
}

StripResult strip_comments(std::string_view raw_source) {
  return Stripper(raw_source).run();
}

}  // namespace drbml
