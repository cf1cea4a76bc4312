#pragma once

#include "ccest/dataset.hpp"
#include "ccest/errors.hpp"
#include "ccest/estimator.hpp"
#include "ccest/proposals.hpp"
#include "ccest/similarity.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace ccest {

/// A dataset the service can run sessions against.
struct ServedDataset {
    std::string name;
    Dataset dataset;
    std::shared_ptr<const SimilarityModel> model;
    ProposalPair similarity;
    ProposalPair uniform;

    static ServedDataset make(std::string name, Dataset dataset, std::shared_ptr<const SimilarityModel> model);
};

// 409 carrying a JSON body, e.g. the final estimate of a stopped session.
struct SessionConflict : ConflictError {
    SessionConflict(const std::string& message, nlohmann::json body)
        : ConflictError(message), payload(std::move(body)) {}
    nlohmann::json payload;
};

enum class SessionStatus { Active, StoppedBudget, StoppedWidth, Abandoned };
std::string_view to_string(SessionStatus s);

/// Append-only NDJSON file; every append is flushed to disk before returning.
class EventLog {
public:
    explicit EventLog(const std::filesystem::path& path);
    ~EventLog();
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    void append(const nlohmann::json& event);
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

// Parses a log. A torn final line (crash mid-write) is dropped and the file
// truncated to the last complete event; any other bad line is a FormatError.
std::vector<nlohmann::json> read_event_log(const std::filesystem::path& path);

class Session;

/// Owns the sessions of one data directory. Every mutation of a session is
/// serialized by that session's mutex; reads return the last published view.
class SessionManager {
public:
    explicit SessionManager(std::filesystem::path data_dir);
    ~SessionManager();

    void add_dataset(ServedDataset dataset);
    nlohmann::json list_datasets() const;
    const ServedDataset& dataset(const std::string& name) const;

    // Rebuilds every session found under data_dir/sessions. Returns the
    // number restored; logs naming an unknown dataset are skipped and
    // reported in `skipped`.
    std::size_t restore(std::vector<std::string>* skipped = nullptr);

    // Request fields: dataset, budget, ratio | alpha with policy, or n and m;
    // seed, proposal (similarity|uniform), mode (nis|nmc), z,
    // stop_rel_width, stop_min_vertices.
    nlohmann::json create(const nlohmann::json& request);
    nlohmann::json view(const std::string& id) const;
    nlohmann::json list() const;
    nlohmann::json next(const std::string& id);
    // answer is "same" or "different".
    nlohmann::json submit(const std::string& id, const std::string& query_id, const std::string& answer);
    nlohmann::json export_record(const std::string& id) const;
    nlohmann::json abandon(const std::string& id);

    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }

private:
    std::shared_ptr<Session> find(const std::string& id) const;
    std::string fresh_id();

    std::filesystem::path data_dir_;
    std::map<std::string, ServedDataset> datasets_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t id_counter_ = 0;
    std::uint64_t id_salt_;
};

int answer_from_string(const std::string& answer);  // ValidationError unless same|different

}  // namespace ccest
