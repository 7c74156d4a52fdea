#include "xrec/documents.hpp"

#include "xrec/embedding_io.hpp"
#include "xrec/error.hpp"
#include "xrec/parallel.hpp"

namespace xrec {

std::map<std::string, DocumentEmbedding> ingest_embeddings(const std::filesystem::path& path) {
  EmbeddingFile file;
  try {
    file = load_embeddings(path);
  } catch (const ParseError& e) {
    throw ValidationError(e.what());
  }
  std::map<std::string, DocumentEmbedding> out;
  for (std::size_t i = 0; i < file.size(); ++i) {
    DocumentEmbedding e;
    e.vector = file.vectors.col(static_cast<Eigen::Index>(i));
    e.source = DocumentEmbedding::Source::Ingested;
    out[file.tokens[i]] = std::move(e);
  }
  return out;
}

AveragedDocument average_documents(std::span<const DocumentEmbedding> embeddings, Eigen::Index dim) {
  AveragedDocument avg;
  if (embeddings.empty()) {
    avg.vector = Eigen::VectorXd::Zero(dim);
    avg.missing = true;
    return avg;
  }
  avg.vector = Eigen::VectorXd::Zero(embeddings.front().vector.size());
  for (const auto& e : embeddings) {
    if (e.vector.size() != avg.vector.size()) {
      throw ValidationError("average_documents: embeddings differ in dimension");
    }
    avg.vector += e.vector;
  }
  avg.vector /= static_cast<double>(embeddings.size());
  return avg;
}

std::vector<AveragedDocument> candidate_document_embeddings(const Dataset& dataset,
                                                            const DocumentEncoder* encoder,
                                                            bool prefer_ingested,
                                                            Eigen::Index dim,
                                                            std::size_t threads) {
  std::vector<AveragedDocument> out(dataset.candidates.size());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const auto& rec = dataset.candidates[i];
    const bool use_vector = rec.doc_embedding && (prefer_ingested || !rec.documents || !encoder);
    if (use_vector) {
      if (rec.doc_embedding->size() != dim) {
        throw ValidationError("document vector for '" + rec.node_id + "' has dimension " +
                              std::to_string(rec.doc_embedding->size()) + ", expected " +
                              std::to_string(dim));
      }
      out[i] = {*rec.doc_embedding, false};
      return;
    }
    std::vector<DocumentEmbedding> articles;
    if (rec.documents && encoder) {
      for (const auto& doc : *rec.documents) articles.push_back(encoder->encode(doc));
    }
    out[i] = average_documents(articles, dim);
  });
  return out;
}

}  // namespace xrec
