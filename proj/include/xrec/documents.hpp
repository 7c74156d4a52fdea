#pragma once

// Per-candidate document representations: encode articles or ingest vectors
// computed elsewhere, then average a candidate's articles.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xrec/dataset.hpp"
#include "xrec/encoder.hpp"

namespace xrec {

/// Embedding text file keyed by node id. Every row must match the header dim.
std::map<std::string, DocumentEmbedding> ingest_embeddings(const std::filesystem::path& path);

struct AveragedDocument {
  Eigen::VectorXd vector;
  bool missing = false;  // no articles: zero vector, text modality absent
};

/// Componentwise mean. An empty list yields zeros of length `dim`, flagged missing.
AveragedDocument average_documents(std::span<const DocumentEmbedding> embeddings, Eigen::Index dim);

/// D_e per candidate, in candidate order. Candidates with neither documents
/// nor a precomputed vector come back flagged missing. When `prefer_ingested`
/// is set, a candidate's doc_embedding wins over its documents.
std::vector<AveragedDocument> candidate_document_embeddings(const Dataset& dataset,
                                                            const DocumentEncoder* encoder,
                                                            bool prefer_ingested,
                                                            Eigen::Index dim,
                                                            std::size_t threads = 1);

}  // namespace xrec
