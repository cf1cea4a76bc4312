#include "ccest/session.hpp"

#include "ccest/budget.hpp"
#include "ccest/run_record.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>

#include <fcntl.h>
#include <unistd.h>

namespace ccest {

namespace fs = std::filesystem;
using json = nlohmann::json;

ServedDataset ServedDataset::make(std::string name, Dataset dataset, std::shared_ptr<const SimilarityModel> model) {
    if (model->size() != dataset.size())
        throw ConsistencyError("similarity size does not match dataset '" + name + "'");
    auto sim = ProposalPair::similarity_driven(model);
    auto uni = ProposalPair::uniform(dataset.size());
    return ServedDataset{std::move(name), std::move(dataset), std::move(model), std::move(sim), std::move(uni)};
}

std::string_view to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::Active: return "active";
        case SessionStatus::StoppedBudget: return "stopped-budget";
        case SessionStatus::StoppedWidth: return "stopped-width";
        case SessionStatus::Abandoned: return "abandoned";
    }
    return "?";
}

int answer_from_string(const std::string& answer) {
    if (answer == "same") return 1;
    if (answer == "different") return 0;
    throw ValidationError("answer must be 'same' or 'different', got '" + answer + "'");
}

// ---------------------------------------------------------------- event log

EventLog::EventLog(const fs::path& path) : path_(path) {
    fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw StateError("cannot open event log " + path.string() + ": " + std::strerror(errno));
}

EventLog::~EventLog() {
    if (fd_ >= 0) ::close(fd_);
}

void EventLog::append(const json& event) {
    std::string line = event.dump() + "\n";
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        ssize_t w = ::write(fd_, p, left);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw StateError("event log write failed: " + std::string(std::strerror(errno)));
        }
        p += w;
        left -= static_cast<std::size_t>(w);
    }
    if (::fsync(fd_) != 0) throw StateError("event log fsync failed: " + std::string(std::strerror(errno)));
}

std::vector<json> read_event_log(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("no event log at " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<json> events;
    std::size_t pos = 0, good_end = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) break;  // torn tail
        std::string_view line(text.data() + pos, nl - pos);
        try {
            events.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw FormatError(path.string() + ": bad event at byte " + std::to_string(pos) + ": " + e.what());
        }
        pos = nl + 1;
        good_end = pos;
    }
    if (good_end < text.size()) fs::resize_file(path, good_end);
    return events;
}

// ---------------------------------------------------------------- session

namespace {

std::string now_iso() {
    using namespace std::chrono;
    auto now = system_clock::now();
    auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<long long>(ms));
    return buf;
}

std::string query_id_for(std::size_t draw_index) { return "q" + std::to_string(draw_index); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("field '") + key + "' has the wrong type");
    }
}

struct SessionSpec {
    std::string dataset;
    BudgetPlan plan;
    RunConfig config;
    std::string proposal = "similarity";
};

SessionSpec parse_request(const json& req, const std::map<std::string, ServedDataset>& datasets) {
    if (!req.is_object()) throw ValidationError("session request must be a JSON object");
    SessionSpec s;
    s.dataset = get_or<std::string>(req, "dataset", "");
    if (s.dataset.empty()) {
        if (datasets.size() != 1) throw ValidationError("field 'dataset' is required");
        s.dataset = datasets.begin()->first;
    }
    if (!datasets.count(s.dataset)) throw NotFoundError("unknown dataset '" + s.dataset + "'");

    if (req.contains("n") || req.contains("m")) {
        auto n = get_or<long long>(req, "n", 0), m = get_or<long long>(req, "m", 0);
        if (n < 1 || m < 1) throw ValidationError("fixed plans need n >= 1 and m >= 1");
        s.plan = fixed_plan(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
    } else {
        auto budget = get_or<long long>(req, "budget", -1);
        if (budget < 1) throw ValidationError("budget must be a positive integer");
        auto policy = budget_policy_from_string(get_or<std::string>(req, "policy", "ratio"));
        double param = policy == BudgetPolicy::Ratio ? get_or<double>(req, "ratio", kDefaultRatio)
                                                     : get_or<double>(req, "alpha", 0.5);
        s.plan = plan_budget(static_cast<std::size_t>(budget), policy, param);
    }
    s.config.seed = get_or<std::uint64_t>(req, "seed", 0);
    s.proposal = get_or<std::string>(req, "proposal", "similarity");
    if (s.proposal != "similarity" && s.proposal != "uniform")
        throw ValidationError("proposal must be 'similarity' or 'uniform'");
    s.config.mode = estimator_mode_from_string(get_or<std::string>(req, "mode", s.proposal == "uniform" ? "nmc" : "nis"));
    s.config.z = get_or<double>(req, "z", kDefaultZ);
    s.config.stop_rel_width = get_or<double>(req, "stop_rel_width", kDefaultStopRelWidth);
    s.config.stop_min_vertices = get_or<std::size_t>(req, "stop_min_vertices", kDefaultStopMinVertices);
    return s;
}

json spec_json(const SessionSpec& s) {
    return {{"dataset", s.dataset},
            {"n", s.plan.n},
            {"m", s.plan.m},
            {"budget", s.plan.total_budget},
            {"policy", std::string(to_string(s.plan.policy))},
            {"policy_parameter", s.plan.parameter},
            {"seed", s.config.seed},
            {"proposal", s.proposal},
            {"mode", std::string(to_string(s.config.mode))},
            {"z", s.config.z},
            {"stop_rel_width", s.config.stop_rel_width},
            {"stop_min_vertices", s.config.stop_min_vertices}};
}

// Canonical creation request: fixed N and M so replay does not depend on
// how a budget was planned.
SessionSpec spec_from_log(const json& created, const std::map<std::string, ServedDataset>& datasets) {
    const json& r = created.at("spec");
    SessionSpec s = parse_request(json{{"dataset", r.at("dataset")}, {"n", r.at("n")}, {"m", r.at("m")},
                                       {"seed", r.at("seed")}, {"proposal", r.at("proposal")}, {"mode", r.at("mode")},
                                       {"z", r.at("z")}, {"stop_rel_width", r.at("stop_rel_width")},
                                       {"stop_min_vertices", r.at("stop_min_vertices")}},
                                  datasets);
    s.plan.total_budget = r.at("budget").get<std::size_t>();
    s.plan.policy = budget_policy_from_string(r.at("policy").get<std::string>());
    s.plan.parameter = r.at("policy_parameter").get<double>();
    return s;
}

}  // namespace

class Session {
public:
    Session(std::string id, const ServedDataset& ds, SessionSpec spec)
        : id_(std::move(id)), ds_(ds), spec_(std::move(spec)),
          run_(spec_.proposal == "uniform" ? ds.uniform : ds.similarity, spec_.plan, spec_.config) {}

    std::mutex mu;

    void attach_log(std::unique_ptr<EventLog> log) { log_ = std::move(log); }

    void emit(json event) {
        event["seq"] = seq_;
        event["ts"] = now_iso();
        log_->append(event);
        ++seq_;
    }

    void log_created() { emit({{"type", "session-created"}, {"session_id", id_}, {"spec", spec_json(spec_)}}); }

    // ---- live operations (caller holds mu)

    json next() {
        refuse_if_closed();
        const std::size_t before = run_.history().size();
        const bool had_pending = run_.pending().has_value();
        auto q = run_.next_query();
        log_progress(before);
        if (q && !had_pending) {
            issued_at_[q->draw_index] = now_iso();
            emit({{"type", "pair-issued"}, {"query_id", query_id_for(q->draw_index)}, {"draw_index", q->draw_index},
                  {"vertex_index", q->vertex_index}, {"u", q->u}, {"v", q->v}});
        }
        publish();
        if (!q) throw SessionConflict("session " + id_ + " has stopped", final_body());
        return {{"session_id", id_}, {"status", std::string(to_string(status()))}, {"query", query_json(*q)}};
    }

    json submit(const std::string& query_id, int answer) {
        if (auto it = answered_.find(query_id); it != answered_.end()) {
            if (it->second.first != answer)
                throw SessionConflict("query " + query_id + " was already answered differently",
                                      json{{"query_id", query_id}, {"recorded", it->second.first ? "same" : "different"}});
            return it->second.second;
        }
        refuse_if_closed();
        const auto& pending = run_.pending();
        if (!pending || query_id_for(pending->draw_index) != query_id)
            throw SessionConflict("query " + query_id + " is not the outstanding query",
                                  json{{"outstanding", pending ? json(query_id_for(pending->draw_index)) : json(nullptr)}});
        emit({{"type", "answer-recorded"}, {"query_id", query_id}, {"u", pending->u}, {"v", pending->v},
              {"answer", answer}});
        return apply_answer(query_id, answer);
    }

    json abandon() {
        if (abandoned_) return view();
        if (run_.finished()) throw SessionConflict("session " + id_ + " has already stopped", final_body());
        emit({{"type", "session-abandoned"}});
        abandoned_ = true;
        publish();
        return view();
    }

    // ---- replay

    void replay(const std::vector<json>& events) {
        std::uint64_t expected = 0;
        for (const auto& ev : events) {
            auto seq = ev.at("seq").get<std::uint64_t>();
            if (seq != expected)
                throw FormatError("session " + id_ + ": event sequence gap at " + std::to_string(expected));
            ++expected;
            const auto type = ev.at("type").get<std::string>();
            if (type == "pair-issued") {
                auto q = run_.next_query();
                if (!q || q->draw_index != ev.at("draw_index").get<std::size_t>() || q->u != ev.at("u").get<std::size_t>() ||
                    q->v != ev.at("v").get<std::size_t>())
                    throw ConsistencyError("session " + id_ + ": replay diverged at seq " + std::to_string(seq));
                issued_at_[q->draw_index] = ev.at("ts").get<std::string>();
            } else if (type == "answer-recorded") {
                auto q = run_.next_query();
                if (!q || query_id_for(q->draw_index) != ev.at("query_id").get<std::string>())
                    throw ConsistencyError("session " + id_ + ": replay diverged at seq " + std::to_string(seq));
                apply_answer(ev.at("query_id").get<std::string>(), ev.at("answer").get<int>(), false);
            } else if (type == "session-abandoned") {
                abandoned_ = true;
            } else if (type == "session-stopped") {
                stop_logged_ = true;
            }
        }
        seq_ = expected;
        publish();
    }

    // ---- views

    SessionStatus status() const {
        if (abandoned_) return SessionStatus::Abandoned;
        switch (run_.status()) {
            case RunStatus::Active: return SessionStatus::Active;
            case RunStatus::StoppedBudget: return SessionStatus::StoppedBudget;
            case RunStatus::StoppedWidth: return SessionStatus::StoppedWidth;
        }
        return SessionStatus::Active;
    }

    json view() const {
        const auto& st = run_.state();
        json history = json::array();
        for (std::size_t i = 0; i < run_.history().size(); ++i) {
            json h = to_json(run_.history()[i]);
            h["vertices_completed"] = i + 1;
            history.push_back(std::move(h));
        }
        json est = run_.has_estimate() ? to_json(run_.estimate()) : json(nullptr);
        auto prov = run_.provisional();
        double rel = run_.has_estimate() ? run_.estimate().rel_width() : std::numeric_limits<double>::infinity();
        const auto& pending = run_.pending();
        return {
            {"session_id", id_},
            {"dataset", spec_.dataset},
            {"status", std::string(to_string(status()))},
            {"config", spec_json(spec_)},
            {"estimate", est},
            {"provisional", prov ? to_json(*prov) : json(nullptr)},
            {"history", std::move(history)},
            {"effort",
             {{"unique_pairs", st.unique_pairs_queried},
              {"total_draws", st.total_draws},
              {"draw_budget", run_.plan().draws()},
              {"effort_fraction", effort_fraction(st.unique_pairs_queried, st.n)},
              {"vertices_completed", st.records.size()},
              {"vertices_planned", run_.plan().n}}},
            {"stop_rule",
             {{"rel_width_target", spec_.config.stop_rel_width},
              {"rel_width", std::isfinite(rel) ? json(rel) : json(nullptr)},
              {"min_vertices", spec_.config.stop_min_vertices}}},
            {"pending", pending ? query_json(*pending) : json(nullptr)},
            {"log_length", seq_},
        };
    }

    json record() const {
        RunRecordContext ctx;
        ctx.tau = ds_.model->tau();
        ctx.calibration = ds_.model->calibration();
        ctx.item_ids = &ds_.dataset.item_ids;
        json r = run_record(run_, ctx);
        r["session_id"] = id_;
        r["dataset"] = spec_.dataset;
        r["status"] = std::string(to_string(status()));
        return r;
    }

    std::shared_ptr<const json> snapshot() const {
        std::lock_guard lk(snap_mu_);
        return snapshot_;
    }

    const std::string& id() const noexcept { return id_; }

private:
    void refuse_if_closed() {
        if (abandoned_) throw SessionConflict("session " + id_ + " was abandoned", final_body());
        if (run_.finished()) throw SessionConflict("session " + id_ + " has stopped", final_body());
    }

    json final_body() const {
        return {{"status", std::string(to_string(status()))},
                {"estimate", run_.has_estimate() ? to_json(run_.estimate()) : json(nullptr)}};
    }

    json apply_answer(const std::string& query_id, int answer, bool live = true) {
        const std::size_t before = run_.history().size();
        run_.submit(answer);
        if (live) log_progress(before);
        json snap = view();
        answered_[query_id] = {answer, snap};
        if (live) publish();
        return snap;
    }

    void log_progress(std::size_t history_before) {
        for (std::size_t i = history_before; i < run_.history().size(); ++i)
            emit({{"type", "estimate-updated"}, {"vertices_completed", i + 1}, {"estimate", to_json(run_.history()[i])}});
        if (run_.finished() && !stop_logged_) {
            emit({{"type", "session-stopped"}, {"status", std::string(to_string(run_.status()))}});
            stop_logged_ = true;
        }
    }

    json query_json(const PendingQuery& q) const {
        auto item = [&](std::size_t i) {
            json j = {{"index", i}, {"id", ds_.dataset.item_ids[i]}};
            if (ds_.dataset.image_refs && !(*ds_.dataset.image_refs)[i].empty()) {
                j["image_uri"] = (*ds_.dataset.image_refs)[i];
                j["image_url"] = "/images/" + (*ds_.dataset.image_refs)[i];
            }
            return j;
        };
        auto it = issued_at_.find(q.draw_index);
        return {{"query_id", query_id_for(q.draw_index)},
                {"draw_index", q.draw_index},
                {"vertex_index", q.vertex_index},
                {"u", item(q.u)},
                {"v", item(q.v)},
                {"q_vertex", q.q_vertex},
                {"q_neighbor", q.q_neighbor},
                {"issued_at", it != issued_at_.end() ? json(it->second) : json(nullptr)}};
    }

    void publish() {
        auto snap = std::make_shared<const json>(view());
        std::lock_guard lk(snap_mu_);
        snapshot_ = std::move(snap);
    }

    std::string id_;
    const ServedDataset& ds_;
    SessionSpec spec_;
    NisRun run_;
    std::unique_ptr<EventLog> log_;
    std::uint64_t seq_ = 0;
    bool abandoned_ = false;
    bool stop_logged_ = false;
    std::map<std::string, std::pair<int, json>> answered_;
    std::map<std::size_t, std::string> issued_at_;
    mutable std::mutex snap_mu_;
    std::shared_ptr<const json> snapshot_;

    friend class SessionManager;
};

// ---------------------------------------------------------------- manager

SessionManager::SessionManager(fs::path data_dir) : data_dir_(std::move(data_dir)) {
    fs::create_directories(data_dir_ / "sessions");
    id_salt_ = std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
               static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
}

SessionManager::~SessionManager() = default;

void SessionManager::add_dataset(ServedDataset dataset) {
    std::unique_lock lk(mu_);
    auto name = dataset.name;
    datasets_.insert_or_assign(name, std::move(dataset));
}

const ServedDataset& SessionManager::dataset(const std::string& name) const {
    std::shared_lock lk(mu_);
    auto it = datasets_.find(name);
    if (it == datasets_.end()) throw NotFoundError("unknown dataset '" + name + "'");
    return it->second;
}

json SessionManager::list_datasets() const {
    std::shared_lock lk(mu_);
    json out = json::array();
    for (const auto& [name, ds] : datasets_)
        out.push_back({{"name", name},
                       {"n", ds.dataset.size()},
                       {"has_images", ds.dataset.image_refs.has_value()},
                       {"tau", ds.model->tau()},
                       {"calibration", std::string(to_string(ds.model->calibration()))}});
    return out;
}

std::string SessionManager::fresh_id() {
    std::uint64_t x = mix64(id_salt_ + mix64(++id_counter_));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

std::size_t SessionManager::restore(std::vector<std::string>* skipped) {
    std::size_t restored = 0;
    std::vector<fs::path> logs;
    for (const auto& entry : fs::directory_iterator(data_dir_ / "sessions"))
        if (entry.path().extension() == ".ndjson") logs.push_back(entry.path());
    std::sort(logs.begin(), logs.end());
    for (const auto& path : logs) {
        auto events = read_event_log(path);
        if (events.empty() || events.front().value("type", "") != "session-created") {
            if (skipped) skipped->push_back(path.string() + ": no creation event");
            continue;
        }
        const std::string id = events.front().at("session_id").get<std::string>();
        std::unique_lock lk(mu_);
        SessionSpec spec;
        try {
            spec = spec_from_log(events.front(), datasets_);
        } catch (const NotFoundError& e) {
            if (skipped) skipped->push_back(path.string() + ": " + e.what());
            continue;
        }
        auto s = std::make_shared<Session>(id, datasets_.at(spec.dataset), spec);
        s->replay(events);
        s->attach_log(std::make_unique<EventLog>(path));
        sessions_[id] = s;
        ++restored;
    }
    return restored;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
    std::shared_lock lk(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
    return it->second;
}

json SessionManager::create(const json& request) {
    std::unique_lock lk(mu_);
    SessionSpec spec = parse_request(request, datasets_);
    std::string id;
    do id = fresh_id();
    while (sessions_.count(id) || fs::exists(data_dir_ / "sessions" / (id + ".ndjson")));
    auto s = std::make_shared<Session>(id, datasets_.at(spec.dataset), spec);
    s->attach_log(std::make_unique<EventLog>(data_dir_ / "sessions" / (id + ".ndjson")));
    s->log_created();
    s->publish();
    sessions_[id] = s;
    return s->view();
}

json SessionManager::view(const std::string& id) const { return *find(id)->snapshot(); }

json SessionManager::list() const {
    std::shared_lock lk(mu_);
    json out = json::array();
    for (const auto& [id, s] : sessions_) {
        auto snap = s->snapshot();
        out.push_back({{"session_id", id}, {"dataset", (*snap)["dataset"]}, {"status", (*snap)["status"]}});
    }
    return out;
}

json SessionManager::next(const std::string& id) {
    auto s = find(id);
    std::lock_guard lk(s->mu);
    return s->next();
}

json SessionManager::submit(const std::string& id, const std::string& query_id, const std::string& answer) {
    int a = answer_from_string(answer);
    auto s = find(id);
    std::lock_guard lk(s->mu);
    return s->submit(query_id, a);
}

json SessionManager::export_record(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lk(s->mu);
    return s->record();
}

json SessionManager::abandon(const std::string& id) {
    auto s = find(id);
    std::lock_guard lk(s->mu);
    return s->abandon();
}

}  // namespace ccest
