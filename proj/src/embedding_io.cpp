#include "xrec/embedding_io.hpp"

#include <sstream>

#include "xrec/error.hpp"
#include "xrec/text.hpp"

namespace xrec {

std::string format_embeddings(const std::vector<std::string>& tokens,
                              const Eigen::MatrixXd& vectors, int digits) {
  if (static_cast<Eigen::Index>(tokens.size()) != vectors.cols()) {
    throw ValidationError("format_embeddings: token count does not match vector count");
  }
  std::string out = std::to_string(tokens.size()) + " " + std::to_string(vectors.rows()) + "\n";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out += tokens[i];
    for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
      out += ' ';
      out += text::format_g(vectors(r, static_cast<Eigen::Index>(i)), digits);
    }
    out += '\n';
  }
  return out;
}

void save_embeddings(const std::filesystem::path& path, const std::vector<std::string>& tokens,
                     const Eigen::MatrixXd& vectors, int digits) {
  text::write_file(path, format_embeddings(tokens, vectors, digits));
}

EmbeddingFile parse_embeddings(const std::string& contents, const std::string& source) {
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::int64_t count = 0;
  std::int64_t dim = 0;
  EmbeddingFile file;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto fields = text::split_ws(line);
    if (!have_header) {
      if (fields.size() != 2) throw ParseError(source, line_no, "expected 'count dim' header");
      count = text::parse_int(fields[0], source, line_no);
      dim = text::parse_int(fields[1], source, line_no);
      if (count < 0 || dim < 1) throw ParseError(source, line_no, "invalid header");
      have_header = true;
      values.reserve(static_cast<std::size_t>(count * dim));
      continue;
    }
    const auto width = static_cast<std::int64_t>(fields.size()) - 1;
    if (width != dim) {
      throw ParseError(source, line_no,
                       "row has " + std::to_string(width) + " values, header says " +
                           std::to_string(dim));
    }
    file.tokens.emplace_back(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      values.push_back(text::parse_double(fields[k], source, line_no));
    }
  }
  if (!have_header) throw ParseError(source, line_no, "missing header");
  if (static_cast<std::int64_t>(file.tokens.size()) != count) {
    throw ParseError(source, line_no,
                     "header declares " + std::to_string(count) + " rows, found " +
                         std::to_string(file.tokens.size()));
  }
  file.vectors = Eigen::Map<Eigen::MatrixXd>(values.data(), dim, count);
  return file;
}

EmbeddingFile load_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(text::read_file(path), path.string());
}

}  // namespace xrec
