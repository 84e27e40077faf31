#include "appagent/history/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>

#include "appagent/core/errors.hpp"
#include "appagent/core/json.hpp"
#include "appagent/core/ops.hpp"

namespace appagent {

std::string make_signature(std::string_view query, std::string_view app_id) {
  return normalize_query(query) + std::string(kSignatureSeparator) + std::string(app_id);
}

HistoryStore::HistoryStore(std::filesystem::path log_path) : path_(std::move(log_path)) {
  std::ifstream in(*path_, std::ios::binary);
  if (!in) return;  // first use; created on first append
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      ++skipped_lines_;  // torn final write
      continue;
    }
    try {
      OperationDocument doc = j.get<OperationDocument>();
      documents_.push_back(std::move(doc));
      index_locked(documents_.back());
    } catch (const std::exception&) {
      ++skipped_lines_;
    }
  }
}

void HistoryStore::index_locked(const OperationDocument& doc) {
  const size_t pos = documents_.size() - 1;
  if (!latest_.contains(doc.signature)) signature_order_.push_back(doc.signature);
  latest_[doc.signature] = pos;
  if (doc.success) latest_success_[doc.signature] = pos;
}

void HistoryStore::append_locked(const OperationDocument& doc) {
  if (path_) {
    const std::string line = canonical(doc) + "\n";
    const int fd = ::open(path_->c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw StorageFailure("cannot open history log " + path_->string() + ": " + std::strerror(errno));
    size_t written = 0;
    while (written < line.size()) {
      const ssize_t n = ::write(fd, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        const std::string err = std::strerror(errno);
        ::close(fd);
        throw StorageFailure("cannot write history log " + path_->string() + ": " + err);
      }
      written += static_cast<size_t>(n);
    }
    if (::fsync(fd) != 0) {
      const std::string err = std::strerror(errno);
      ::close(fd);
      throw StorageFailure("cannot sync history log " + path_->string() + ": " + err);
    }
    ::close(fd);
  }
  documents_.push_back(doc);
  index_locked(documents_.back());
}

std::vector<OperationDocument> HistoryStore::record(std::string_view query, const ExecutionTrace& trace,
                                                    const IntegratedResponse& response, ReasoningPort& reasoning,
                                                    const std::optional<std::string>& reuse_note) {
  std::vector<std::string> apps;
  for (const auto& step : trace.steps) {
    if (std::find(apps.begin(), apps.end(), step.app_id) == apps.end()) apps.push_back(step.app_id);
  }
  if (apps.empty()) return {};

  std::string note;
  if (reuse_note) {
    note = *reuse_note;
  } else {
    try {
      note = reasoning.summarize_task(trace, response);
    } catch (const Error& e) {
      note = "Summary unavailable (" + std::string(e.what()) + ").";
    }
  }
  note = clamp_note(note);

  const Timestamp now = now_ms();
  std::vector<OperationDocument> docs;
  for (const auto& app : apps) {
    OperationDocument doc;
    doc.signature = make_signature(query, app);
    doc.app_id = app;
    for (const auto& step : trace.steps) {
      if (step.app_id != app) continue;
      doc.action_summary.push_back(step.action);
      doc.observed_kinds.push_back(step.observation.page_kind);
    }
    const bool failed = std::any_of(trace.failures.begin(), trace.failures.end(),
                                    [&](const TraceFailure& f) { return f.app_id == app; });
    doc.success = !failed && !doc.action_summary.empty();
    doc.outcome_note = note;
    doc.created_at = now;
    doc.last_used_at = now;
    docs.push_back(std::move(doc));
  }

  std::lock_guard lock(mu_);
  for (auto& doc : docs) {
    if (auto it = latest_.find(doc.signature); it != latest_.end()) {
      doc.use_count = documents_[it->second].use_count;
      doc.last_used_at = documents_[it->second].last_used_at;
    }
    append_locked(doc);
  }
  return docs;
}

std::optional<OperationDocument> HistoryStore::lookup(std::string_view query, std::string_view app_id) {
  const std::string sig = make_signature(query, app_id);
  std::lock_guard lock(mu_);
  auto it = latest_success_.find(sig);
  if (it == latest_success_.end()) return std::nullopt;
  OperationDocument doc = documents_[it->second];
  doc.use_count += 1;
  doc.last_used_at = std::max(now_ms(), doc.last_used_at);
  try {
    append_locked(doc);
  } catch (const StorageFailure&) {
    // The hit is still valid; only the usage statistics are lost.
  }
  return doc;
}

std::vector<OperationDocument> HistoryStore::hints(std::string_view query, const std::vector<std::string>& app_ids,
                                                   size_t limit) const {
  std::lock_guard lock(mu_);
  std::vector<OperationDocument> out;
  std::set<std::string> taken;
  for (const auto& app : app_ids) {
    if (out.size() >= limit) break;
    const auto sig = make_signature(query, app);
    if (auto it = latest_success_.find(sig); it != latest_success_.end()) {
      out.push_back(documents_[it->second]);
      taken.insert(sig);
    }
  }
  std::vector<size_t> others;
  for (const auto& [sig, pos] : latest_success_) {
    if (!taken.contains(sig)) others.push_back(pos);
  }
  std::sort(others.rbegin(), others.rend());
  for (size_t pos : others) {
    if (out.size() >= limit) break;
    out.push_back(documents_[pos]);
  }
  return out;
}

std::optional<OperationDocument> HistoryStore::latest(std::string_view signature) const {
  std::lock_guard lock(mu_);
  auto it = latest_.find(std::string(signature));
  if (it == latest_.end()) return std::nullopt;
  return documents_[it->second];
}

std::vector<OperationDocument> HistoryStore::list() const {
  std::lock_guard lock(mu_);
  std::vector<OperationDocument> out;
  for (const auto& sig : signature_order_) out.push_back(documents_[latest_.at(sig)]);
  return out;
}

std::vector<OperationDocument> HistoryStore::documents() const {
  std::lock_guard lock(mu_);
  return documents_;
}

}  // namespace appagent
