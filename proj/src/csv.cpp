#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "ssmean/dataset.hpp"
#include "ssmean/error.hpp"
#include "ssmean/io.hpp"

namespace ssmean {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
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

double parse_number(std::string_view cell, std::size_t line_no, std::size_t col) {
  std::string lower(cell);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "nan" || lower == "na") return std::numeric_limits<double>::quiet_NaN();
  if (lower == "inf" || lower == "+inf") return std::numeric_limits<double>::infinity();
  if (lower == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    fail(ErrorKind::kParse, "line " + std::to_string(line_no) + ", column " +
                                std::to_string(col) + ": cannot parse '" +
                                std::string(cell) + "' as a number");
  }
  return value;
}

void check_finite_rows(const CsvTable& table, std::size_t first_col) {
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = static_cast<Eigen::Index>(first_col); c < table.values.cols();
         ++c) {
      if (!std::isfinite(table.values(r, c))) {
        // Header is line 1.
        fail(ErrorKind::kValidation,
             "non-finite value at line " + std::to_string(r + 2) + ", column " +
                 std::to_string(c + 1) + " ('" +
                 table.header[static_cast<std::size_t>(c)] + "')");
      }
    }
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      fail(ErrorKind::kIo, "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorKind::kIo, "cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable parse_csv(std::string_view text) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  CsvTable table;
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (table.header.empty()) {
      for (auto f : fields) {
        require(!f.empty(), ErrorKind::kParse,
                "line " + std::to_string(line_no) + ": empty column name in header");
        table.header.emplace_back(f);
      }
      continue;
    }
    require(fields.size() == table.header.size(), ErrorKind::kParse,
            "line " + std::to_string(line_no) + ": expected " +
                std::to_string(table.header.size()) + " fields, found " +
                std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      values.push_back(parse_number(fields[c], line_no, c + 1));
    }
    ++rows;
  }
  require(!table.header.empty(), ErrorKind::kParse, "CSV has no header row");
  table.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(rows),
      static_cast<Eigen::Index>(table.header.size()));
  return table;
}

LabeledData parse_labeled_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  require(table.header.size() >= 2, ErrorKind::kValidation,
          "labeled CSV needs an outcome column and at least one feature column");
  require(table.values.rows() >= 1, ErrorKind::kValidation, "labeled CSV has no rows");
  check_finite_rows(table, 0);
  LabeledData out;
  out.feature_names.assign(table.header.begin() + 1, table.header.end());
  out.outcomes = table.values.col(0);
  out.features = table.values.rightCols(table.values.cols() - 1);
  return out;
}

UnlabeledData parse_unlabeled_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  require(table.values.rows() >= 1, ErrorKind::kValidation, "unlabeled CSV has no rows");
  check_finite_rows(table, 0);
  return {table.header, table.values};
}

LabeledData load_labeled_csv(const std::filesystem::path& path) {
  try {
    return parse_labeled_csv(read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

UnlabeledData load_unlabeled_csv(const std::filesystem::path& path) {
  try {
    return parse_unlabeled_csv(read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void check_feature_names(const std::vector<std::string>& labeled,
                         const std::vector<std::string>& unlabeled) {
  if (labeled == unlabeled) return;
  std::string detail;
  const std::size_t width = std::max(labeled.size(), unlabeled.size());
  for (std::size_t i = 0; i < width; ++i) {
    const std::string a = i < labeled.size() ? labeled[i] : "<missing>";
    const std::string b = i < unlabeled.size() ? unlabeled[i] : "<missing>";
    if (a == b) continue;
    if (!detail.empty()) detail += "; ";
    detail += "feature " + std::to_string(i + 1) + ": labeled '" + a + "' vs unlabeled '" +
              b + "'";
  }
  fail(ErrorKind::kHeaderMismatch, "feature columns differ between files: " + detail);
}

Dataset load_dataset(const std::filesystem::path& labeled,
                     const std::filesystem::path& unlabeled) {
  LabeledData l = load_labeled_csv(labeled);
  UnlabeledData u = load_unlabeled_csv(unlabeled);
  check_feature_names(l.feature_names, u.feature_names);
  return Dataset(std::move(l.outcomes), std::move(l.features), std::move(u.features));
}

}  // namespace ssmean
