#pragma once

// Classic word-embedding text format: a `count dim` header line followed by
// `token v1 ... vd` rows.

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace xrec {

struct EmbeddingFile {
  std::vector<std::string> tokens;
  Eigen::MatrixXd vectors;  // dim x count, one column per token

  Eigen::Index dim() const { return vectors.rows(); }
  std::size_t size() const { return tokens.size(); }
};

inline constexpr int kEmbeddingDigits = 6;

std::string format_embeddings(const std::vector<std::string>& tokens,
                              const Eigen::MatrixXd& vectors, int digits = kEmbeddingDigits);
void save_embeddings(const std::filesystem::path& path, const std::vector<std::string>& tokens,
                     const Eigen::MatrixXd& vectors, int digits = kEmbeddingDigits);

/// Throws ParseError naming the first row whose width disagrees with the header.
EmbeddingFile parse_embeddings(const std::string& contents, const std::string& source = "<embeddings>");
EmbeddingFile load_embeddings(const std::filesystem::path& path);

}  // namespace xrec
