#ifndef CTSNE_SERVER_HPP
#define CTSNE_SERVER_HPP

#include "evaluation.hpp"
#include "pipeline.hpp"

#include <httplib.h>
#include <json.hpp>

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

namespace ctsne::server {

using nlohmann::json;

class NotFound : public Error {
public:
    using Error::Error;
};

/// The requested resource exists but is not in a state that can serve the request.
class Conflict : public Error {
public:
    using Error::Error;
};

enum class JobState { queued, running, finished, failed };

inline std::string to_string(JobState s) {
    switch (s) {
    case JobState::queued: return "queued";
    case JobState::running: return "running";
    case JobState::finished: return "finished";
    case JobState::failed: return "failed";
    }
    return "failed";
}

inline JobState job_state_from(const std::string& s) {
    if (s == "queued") return JobState::queued;
    if (s == "running") return JobState::running;
    if (s == "finished") return JobState::finished;
    if (s == "failed") return JobState::failed;
    throw Error("unknown job state '" + s + "'");
}

/**
 * Optimizer and affinity settings from a job payload. Every key is optional;
 * unknown keys are rejected so typos do not silently fall back to defaults.
 */
inline EmbedRequest parse_job_config(const json& config) {
    require(config.is_object(), "job config must be a JSON object");
    EmbedRequest req;
    auto& opt = req.optimizer;
    for (auto it = config.begin(); it != config.end(); ++it) {
        const auto& key = it.key();
        const auto& v = it.value();
        auto number = [&]() {
            require(v.is_number(), "config field '" + key + "' must be a number");
            return v.get<double>();
        };
        auto integer = [&]() {
            require(v.is_number_integer(), "config field '" + key + "' must be an integer");
            return v.get<std::int64_t>();
        };
        if (key == "perplexity") req.perplexity = number();
        else if (key == "beta_prime") req.beta_prime = number();
        else if (key == "global_sigma") req.global_sigma = number();
        else if (key == "theta") opt.theta = number();
        else if (key == "learning_rate") opt.learning_rate = number();
        else if (key == "exaggeration") opt.exaggeration = number();
        else if (key == "min_gradient_norm") opt.min_gradient_norm = number();
        else if (key == "iterations") opt.iterations = static_cast<int>(integer());
        else if (key == "restarts") opt.restarts = static_cast<int>(integer());
        else if (key == "snapshot_interval") opt.snapshot_interval = static_cast<int>(integer());
        else if (key == "seed") {
            require(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
                    "config field 'seed' must be a non-negative integer");
            opt.seed = v.get<std::uint64_t>();
        } else if (key == "engine") {
            require(v == "bh" || v == "exact", "engine must be 'bh' or 'exact'");
            opt.engine = v == "bh" ? Engine::bh : Engine::exact;
        } else if (key == "criterion") {
            require(v == "standard" || v == "paper", "criterion must be 'standard' or 'paper'");
            opt.criterion = v == "standard" ? Criterion::standard : Criterion::paper;
        } else {
            throw ValidationError("unknown config field '" + key + "'");
        }
    }
    require(req.perplexity >= 2, "perplexity must be at least 2");
    require(!req.beta_prime || (*req.beta_prime > 0 && *req.beta_prime <= 1), "beta' must be in (0, 1]");
    require(!req.global_sigma || *req.global_sigma > 0, "global sigma must be positive");
    opt.validate();
    req.deterministic = true;
    return req;
}

/// Binary embedding payload: uint32 LE header length, JSON header, float64 LE values column by column.
inline std::string encode_embedding(const EmbeddingMatrix& y, json header = json::object()) {
    header["n"] = y.size();
    header["d"] = y.dims();
    header["dtype"] = "float64";
    header["layout"] = "column-major";
    header["byte_order"] = "little";
    const std::string head = header.dump();
    std::string out;
    out.reserve(4 + head.size() + 8 * y.coords.values().size());
    const auto len = static_cast<std::uint32_t>(head.size());
    for (int b = 0; b < 4; ++b) {
        out += static_cast<char>((len >> (8 * b)) & 0xff);
    }
    out += head;
    for (std::size_t c = 0; c < y.dims(); ++c) {
        for (std::size_t r = 0; r < y.size(); ++r) {
            std::uint64_t bits;
            const double v = y.coords(r, c);
            std::memcpy(&bits, &v, 8);
            for (int b = 0; b < 8; ++b) {
                out += static_cast<char>((bits >> (8 * b)) & 0xff);
            }
        }
    }
    return out;
}

inline EmbeddingMatrix decode_embedding(std::string_view payload, json* header_out = nullptr) {
    require(payload.size() >= 4, "embedding payload too short");
    std::uint32_t len = 0;
    for (int b = 0; b < 4; ++b) {
        len |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[b])) << (8 * b);
    }
    require(payload.size() >= 4 + len, "embedding payload header truncated");
    const auto header = json::parse(payload.substr(4, len));
    const auto n = header.at("n").get<std::size_t>(), d = header.at("d").get<std::size_t>();
    require(payload.size() == 4 + len + 8 * n * d, "embedding payload size does not match its header");
    EmbeddingMatrix y{Matrix(n, d)};
    const char* data = payload.data() + 4 + len;
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t r = 0; r < n; ++r) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b) {
                bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[8 * (c * n + r) + b])) << (8 * b);
            }
            std::memcpy(&y.coords(r, c), &bits, 8);
        }
    }
    if (header_out) {
        *header_out = header;
    }
    return y;
}

struct DatasetRecord {
    std::string id;
    std::string name;
    std::shared_ptr<const Dataset> data;
};

struct PriorRecord {
    std::string id;
    std::string dataset;
    /// uploaded-column, ui-selection or combined.
    std::string provenance;
    json source;
    LabelVector labels;
};

struct Job {
    std::string id;
    std::string dataset;
    std::optional<std::string> prior;
    json config;

    mutable std::mutex mutex;
    JobState state = JobState::queued;
    std::string error;
    std::optional<Snapshot> snapshot;
    std::optional<EmbeddingMatrix> snapshot_embedding;
    std::optional<EmbeddingMatrix> result;
    std::optional<json> metadata;
};

/**
 * Dataset/prior/job registry with a worker queue. State is mirrored under
 * `root` so a restarted service keeps every dataset, prior and finished
 * result; jobs interrupted by a shutdown are queued again.
 */
class Service {
public:
    explicit Service(std::filesystem::path root, int workers = 1) : root_(std::move(root)) {
        require(workers >= 1, "worker count must be positive");
        for (const char* sub : {"datasets", "priors", "jobs"}) {
            std::filesystem::create_directories(root_ / sub);
        }
        load();
        for (int w = 0; w < workers; ++w) {
            workers_.emplace_back([this] { work(); });
        }
    }

    ~Service() { shutdown(); }

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Stops the workers; a job in progress is abandoned and stays queued on disk.
    void shutdown() {
        {
            std::lock_guard lock(mutex_);
            if (stopping_) {
                return;
            }
            stopping_ = true;
        }
        queue_cv_.notify_all();
        for (auto& t : workers_) {
            t.join();
        }
        workers_.clear();
    }

    json add_dataset(std::string_view text, TableFormat format, const std::string& name) {
        auto data = std::make_shared<Dataset>(parse_dataset(text, format));
        data->validate();
        std::lock_guard lock(mutex_);
        DatasetRecord rec{next_id("ds"), name, data};
        const auto dir = root_ / "datasets" / rec.id;
        std::filesystem::create_directories(dir);
        save_dataset(*data, dir / "data.tsv");
        write_json(dir / "info.json", {{"id", rec.id}, {"name", name}});
        datasets_[rec.id] = rec;
        return dataset_json(rec);
    }

    json dataset_meta(const std::string& id) const {
        std::lock_guard lock(mutex_);
        return dataset_json(dataset_locked(id));
    }

    json make_prior(const json& body) {
        require(body.is_object(), "prior request must be a JSON object");
        const auto dataset_id = string_field(body, "dataset");
        std::lock_guard lock(mutex_);
        const auto& ds = dataset_locked(dataset_id);
        const std::size_t n = ds.data->size();
        const int sources = static_cast<int>(body.contains("column")) + static_cast<int>(body.contains("labels")) +
                            static_cast<int>(body.contains("selections")) + static_cast<int>(body.contains("combine"));
        require(sources == 1, "a prior needs exactly one of 'column', 'labels', 'selections' or 'combine'");

        PriorRecord rec;
        rec.dataset = dataset_id;
        if (body.contains("column")) {
            rec.provenance = "uploaded-column";
            const auto attr = attribute_index(*ds.data, body["column"]);
            std::vector<double> values(n);
            for (std::size_t i = 0; i < n; ++i) {
                values[i] = ds.data->points(i, attr);
            }
            rec.labels = LabelVector::encode(values);
            rec.source = {{"column", ds.data->attribute_names[attr]}};
        } else if (body.contains("labels")) {
            rec.provenance = "uploaded-column";
            const auto& raw = body["labels"];
            require(raw.is_array() && raw.size() == n,
                    "'labels' must be an array with one entry per dataset row (" + std::to_string(n) + ")");
            std::vector<std::string> values;
            for (const auto& v : raw) {
                require(v.is_string() || v.is_number_integer(), "label values must be strings or integers");
                values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            }
            rec.labels = LabelVector::encode(values);
            rec.source = {{"labels", "inline"}};
        } else if (body.contains("selections")) {
            rec.provenance = "ui-selection";
            const auto& sets = body["selections"];
            require(sets.is_array() && !sets.empty(), "'selections' must be a non-empty array of index arrays");
            std::vector<std::size_t> raw(n, 0);
            for (std::size_t s = 0; s < sets.size(); ++s) {
                const auto indices = index_list(sets[s], n, "selection " + std::to_string(s));
                require(!indices.empty(), "selection " + std::to_string(s) + " is empty");
                for (auto i : indices) {
                    require(raw[i] == 0, "selections overlap at point " + std::to_string(i));
                    raw[i] = s + 1;
                }
            }
            rec.labels = LabelVector::encode(raw);
            rec.source = {{"selections", sets.size()}};
        } else {
            rec.provenance = "combined";
            const auto& ids = body["combine"];
            require(ids.is_array() && !ids.empty(), "'combine' must be a non-empty array of prior ids");
            std::optional<LabelVector> acc;
            for (const auto& pid : ids) {
                require(pid.is_string(), "'combine' entries must be prior ids");
                const auto& other = prior_locked(pid.get<std::string>());
                require(other.dataset == dataset_id, "prior '" + other.id + "' belongs to another dataset");
                acc = acc ? combine_labels(*acc, other.labels) : other.labels;
            }
            rec.labels = *acc;
            rec.source = {{"combine", ids}};
        }
        rec.id = next_id("pr");
        persist_prior(rec);
        priors_[rec.id] = rec;
        return prior_json(rec, false);
    }

    json prior_info(const std::string& id) const {
        std::lock_guard lock(mutex_);
        return prior_json(prior_locked(id), true);
    }

    json submit_job(const json& body) {
        require(body.is_object(), "job request must be a JSON object");
        const auto dataset_id = string_field(body, "dataset");
        const json config = body.value("config", json::object());
        parse_job_config(config);
        auto job = std::make_shared<Job>();
        {
            std::lock_guard lock(mutex_);
            dataset_locked(dataset_id);
            if (body.contains("prior") && !body["prior"].is_null()) {
                require(body["prior"].is_string(), "'prior' must be a prior id");
                const auto& prior = prior_locked(body["prior"].get<std::string>());
                require(prior.dataset == dataset_id, "prior '" + prior.id + "' belongs to another dataset");
                job->prior = prior.id;
            }
            job->id = next_id("job");
            job->dataset = dataset_id;
            job->config = config;
            jobs_[job->id] = job;
            persist_job(*job);
            queue_.push_back(job);
        }
        queue_cv_.notify_one();
        return {{"id", job->id}, {"state", "queued"}};
    }

    json job_status(const std::string& id) const {
        const auto job = job_ptr(id);
        std::lock_guard lock(job->mutex);
        json out = {{"id", job->id}, {"dataset", job->dataset}, {"prior", job->prior ? json(*job->prior) : json()},
                    {"config", job->config}, {"state", to_string(job->state)}};
        if (job->snapshot) {
            out["snapshot"] = {{"restart", job->snapshot->restart},
                               {"iteration", job->snapshot->iteration},
                               {"objective", job->snapshot->objective}};
        }
        if (!job->error.empty()) {
            out["error"] = job->error;
        }
        if (job->metadata) {
            out["metadata"] = *job->metadata;
        }
        return out;
    }

    /// Final embedding when finished, otherwise the latest snapshot.
    std::pair<EmbeddingMatrix, json> job_embedding(const std::string& id) {
        const auto job = job_ptr(id);
        std::lock_guard lock(job->mutex);
        if (job->state == JobState::finished) {
            if (!job->result) {
                job->result = load_embedding(root_ / "jobs" / job->id / "embedding.tsv");
            }
            return {*job->result, {{"final", true}, {"iteration", job->metadata->value("iterations_run", 0)}}};
        }
        if (job->snapshot_embedding) {
            return {*job->snapshot_embedding, {{"final", false}, {"iteration", job->snapshot->iteration}}};
        }
        throw Conflict("job '" + id + "' has no embedding yet (state " + to_string(job->state) + ")");
    }

    json rank(const json& body) const {
        require(body.is_object(), "rank request must be a JSON object");
        const auto dataset_id = string_field(body, "dataset");
        std::shared_ptr<const Dataset> data;
        {
            std::lock_guard lock(mutex_);
            data = dataset_locked(dataset_id).data;
        }
        require(body.contains("selection"), "rank request needs a 'selection'");
        const auto selection = index_list(body["selection"], data->size(), "selection");
        const auto ranking = feature_rank(*data, selection);
        json ranked = json::array();
        for (const auto& fw : ranking.ranked) {
            ranked.push_back({{"attribute", fw.attribute}, {"name", fw.name}, {"weight", fw.weight}});
        }
        return {{"dataset", dataset_id}, {"ranked", ranked}, {"intercept", ranking.intercept},
                {"iterations", ranking.iterations}};
    }

private:
    struct Cancelled {};

    static void write_json(const std::filesystem::path& path, const json& value) {
        const auto tmp = path.string() + ".tmp";
        detail::write_text(tmp, value.dump(2) + "\n");
        std::filesystem::rename(tmp, path);
    }

    static json read_json(const std::filesystem::path& path) {
        std::ifstream in(path);
        require(static_cast<bool>(in), "cannot read '" + path.string() + "'");
        return json::parse(in);
    }

    static std::string string_field(const json& body, const char* key) {
        require(body.contains(key) && body[key].is_string(), std::string("missing string field '") + key + "'");
        return body[key].get<std::string>();
    }

    static std::vector<std::size_t> index_list(const json& value, std::size_t n, const std::string& what) {
        require(value.is_array(), what + " must be an array of point indices");
        std::vector<std::size_t> out;
        for (const auto& v : value) {
            require(v.is_number_integer() && v.get<std::int64_t>() >= 0 && v.get<std::uint64_t>() < n,
                    what + " has an index outside [0, " + std::to_string(n) + ")");
            out.push_back(v.get<std::size_t>());
        }
        return out;
    }

    static std::size_t attribute_index(const Dataset& data, const json& column) {
        if (column.is_string()) {
            const auto& names = data.attribute_names;
            const auto it = std::find(names.begin(), names.end(), column.get<std::string>());
            require(it != names.end(), "no attribute named '" + column.get<std::string>() + "'");
            return static_cast<std::size_t>(it - names.begin());
        }
        require(column.is_number_integer() && column.get<std::int64_t>() >= 0 &&
                    column.get<std::uint64_t>() < data.dims(),
                "'column' must be an attribute name or a 0-based attribute index");
        return column.get<std::size_t>();
    }

    std::string next_id(const std::string& prefix) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s-%06llu", prefix.c_str(), static_cast<unsigned long long>(++counter_));
        return buf;
    }

    void note_id(const std::string& id) {
        const auto dash = id.rfind('-');
        if (dash != std::string::npos) {
            counter_ = std::max<std::uint64_t>(counter_, std::strtoull(id.c_str() + dash + 1, nullptr, 10));
        }
    }

    const DatasetRecord& dataset_locked(const std::string& id) const {
        const auto it = datasets_.find(id);
        if (it == datasets_.end()) {
            throw NotFound("unknown dataset '" + id + "'");
        }
        return it->second;
    }

    const PriorRecord& prior_locked(const std::string& id) const {
        const auto it = priors_.find(id);
        if (it == priors_.end()) {
            throw NotFound("unknown prior '" + id + "'");
        }
        return it->second;
    }

    std::shared_ptr<Job> job_ptr(const std::string& id) const {
        std::lock_guard lock(mutex_);
        const auto it = jobs_.find(id);
        if (it == jobs_.end()) {
            throw NotFound("unknown job '" + id + "'");
        }
        return it->second;
    }

    json dataset_json(const DatasetRecord& rec) const {
        json priors = json::array(), jobs = json::array();
        for (const auto& [pid, p] : priors_) {
            if (p.dataset == rec.id) priors.push_back(pid);
        }
        for (const auto& [jid, j] : jobs_) {
            if (j->dataset == rec.id) jobs.push_back(jid);
        }
        return {{"id", rec.id},     {"name", rec.name},     {"n", rec.data->size()},
                {"d", rec.data->dims()}, {"attribute_names", rec.data->attribute_names},
                {"priors", priors}, {"jobs", jobs}};
    }

    static json prior_json(const PriorRecord& rec, bool with_labels) {
        json out = {{"id", rec.id},
                    {"dataset", rec.dataset},
                    {"provenance", rec.provenance},
                    {"source", rec.source},
                    {"num_labels", rec.labels.num_classes()},
                    {"class_sizes", rec.labels.class_sizes()}};
        if (with_labels) {
            out["labels"] = rec.labels.labels();
        }
        return out;
    }

    void persist_prior(const PriorRecord& rec) const {
        write_json(root_ / "priors" / (rec.id + ".json"), {{"id", rec.id},
                                                           {"dataset", rec.dataset},
                                                           {"provenance", rec.provenance},
                                                           {"source", rec.source},
                                                           {"labels", rec.labels.labels()}});
    }

    /// Caller holds job.mutex or has exclusive access.
    void persist_job(const Job& job) const {
        const auto dir = root_ / "jobs" / job.id;
        std::filesystem::create_directories(dir);
        json out = {{"id", job.id},
                    {"dataset", job.dataset},
                    {"prior", job.prior ? json(*job.prior) : json()},
                    {"config", job.config},
                    {"state", to_string(job.state)},
                    {"error", job.error}};
        if (job.metadata) {
            out["metadata"] = *job.metadata;
        }
        write_json(dir / "job.json", out);
    }

    void load() {
        for (const auto& entry : std::filesystem::directory_iterator(root_ / "datasets")) {
            const auto info = read_json(entry.path() / "info.json");
            DatasetRecord rec{info.at("id"), info.value("name", ""),
                              std::make_shared<Dataset>(load_dataset(entry.path() / "data.tsv"))};
            note_id(rec.id);
            datasets_[rec.id] = rec;
        }
        for (const auto& entry : std::filesystem::directory_iterator(root_ / "priors")) {
            if (entry.path().extension() != ".json") {
                continue;
            }
            const auto j = read_json(entry.path());
            PriorRecord rec{j.at("id"), j.at("dataset"), j.at("provenance"), j.value("source", json::object()),
                            LabelVector::encode(j.at("labels").get<std::vector<std::uint32_t>>())};
            note_id(rec.id);
            priors_[rec.id] = rec;
        }
        std::vector<std::shared_ptr<Job>> pending;
        for (const auto& entry : std::filesystem::directory_iterator(root_ / "jobs")) {
            const auto j = read_json(entry.path() / "job.json");
            auto job = std::make_shared<Job>();
            job->id = j.at("id");
            job->dataset = j.at("dataset");
            if (!j.at("prior").is_null()) {
                job->prior = j.at("prior").get<std::string>();
            }
            job->config = j.at("config");
            job->state = job_state_from(j.at("state"));
            job->error = j.value("error", "");
            if (j.contains("metadata")) {
                job->metadata = j.at("metadata");
            }
            note_id(job->id);
            if (job->state == JobState::queued || job->state == JobState::running) {
                job->state = JobState::queued;
                pending.push_back(job);
            }
            jobs_[job->id] = job;
        }
        std::sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) { return a->id < b->id; });
        queue_.assign(pending.begin(), pending.end());
    }

    void work() {
        for (;;) {
            std::shared_ptr<Job> job;
            {
                std::unique_lock lock(mutex_);
                queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
                if (stopping_) {
                    return;
                }
                job = queue_.front();
                queue_.pop_front();
            }
            execute(*job);
        }
    }

    void execute(Job& job) {
        std::shared_ptr<const Dataset> data;
        std::optional<LabelVector> labels;
        {
            std::lock_guard lock(mutex_);
            data = datasets_.at(job.dataset).data;
            if (job.prior) {
                labels = priors_.at(*job.prior).labels;
            }
        }
        {
            std::lock_guard lock(job.mutex);
            job.state = JobState::running;
            persist_job(job);
        }
        try {
            const auto request = parse_job_config(job.config);
            auto result = embed(*data, labels, request, [&](const Snapshot& snap) {
                {
                    std::lock_guard lock(mutex_);
                    if (stopping_) {
                        throw Cancelled{};
                    }
                }
                std::lock_guard lock(job.mutex);
                job.snapshot = snap;
                job.snapshot->embedding = nullptr;
                job.snapshot_embedding = *snap.embedding;
            });
            const auto dir = root_ / "jobs" / job.id;
            save_embedding(result.embedding, dir / "embedding.tsv");
            save_metadata(result.metadata, dir / "embedding.tsv");
            std::lock_guard lock(job.mutex);
            job.metadata = result.metadata.to_json();
            job.result = std::move(result.embedding);
            job.snapshot_embedding.reset();
            job.state = JobState::finished;
            persist_job(job);
        } catch (const Cancelled&) {
            std::lock_guard lock(job.mutex);
            job.state = JobState::queued;
            persist_job(job);
        } catch (const std::exception& e) {
            std::lock_guard lock(job.mutex);
            job.state = JobState::failed;
            job.error = e.what();
            persist_job(job);
        }
    }

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    std::condition_variable queue_cv_;
    bool stopping_ = false;
    std::uint64_t counter_ = 0;
    std::map<std::string, DatasetRecord> datasets_;
    std::map<std::string, PriorRecord> priors_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::deque<std::shared_ptr<Job>> queue_;
    std::vector<std::thread> workers_;
};

/// HTTP front end for a Service. Errors are JSON {code, message}.
class HttpServer {
public:
    explicit HttpServer(Service& service) : service_(service) { routes(); }

    /// Binds to `port` (0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port) {
        bound_port_ = port == 0 ? http_.bind_to_any_port(host) : (http_.bind_to_port(host, port) ? port : -1);
        if (bound_port_ < 0) {
            throw Error("cannot bind " + host + ":" + std::to_string(port));
        }
        return bound_port_;
    }

    /// Blocks until stop().
    void listen() { http_.listen_after_bind(); }

    void stop() { http_.stop(); }
    void wait_until_ready() const { http_.wait_until_ready(); }
    int port() const { return bound_port_; }

private:
    static void send_json(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
        send_json(res, status, {{"code", code}, {"message", message}});
    }

    template <typename Handler>
    static httplib::Server::Handler guarded(Handler handler) {
        return [handler](const httplib::Request& req, httplib::Response& res) {
            try {
                handler(req, res);
            } catch (const NotFound& e) {
                send_error(res, 404, "not_found", e.what());
            } catch (const Conflict& e) {
                send_error(res, 409, "not_ready", e.what());
            } catch (const ValidationError& e) {
                send_error(res, 400, "validation_error", e.what());
            } catch (const json::exception& e) {
                send_error(res, 400, "bad_request", std::string("malformed JSON: ") + e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "internal_error", e.what());
            }
        };
    }

    static json body_json(const httplib::Request& req) { return json::parse(req.body); }

    void routes() {
        http_.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                   {"Access-Control-Allow-Headers", "Content-Type"},
                                   {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        http_.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        http_.Post("/datasets", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto fmt = req.get_param_value("format");
                       require(fmt.empty() || fmt == "tsv" || fmt == "csv", "format must be 'tsv' or 'csv'");
                       send_json(res, 201,
                                 service_.add_dataset(req.body, fmt == "csv" ? TableFormat::csv : TableFormat::tsv,
                                                      req.get_param_value("name")));
                   }));
        http_.Get("/datasets/:id/meta", guarded([this](const httplib::Request& req, httplib::Response& res) {
                      send_json(res, 200, service_.dataset_meta(req.path_params.at("id")));
                  }));
        http_.Post("/priors", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 201, service_.make_prior(body_json(req)));
                   }));
        http_.Get("/priors/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
                      send_json(res, 200, service_.prior_info(req.path_params.at("id")));
                  }));
        http_.Post("/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 202, service_.submit_job(body_json(req)));
                   }));
        http_.Get("/jobs/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
                      send_json(res, 200, service_.job_status(req.path_params.at("id")));
                  }));
        http_.Get("/jobs/:id/embedding", guarded([this](const httplib::Request& req, httplib::Response& res) {
                      auto [y, header] = service_.job_embedding(req.path_params.at("id"));
                      res.set_content(encode_embedding(y, header), "application/octet-stream");
                  }));
        http_.Post("/rank", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 200, service_.rank(body_json(req)));
                   }));
        http_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                send_error(res, res.status, res.status == 404 ? "not_found" : "http_error",
                           "HTTP " + std::to_string(res.status));
            }
        });
    }

    Service& service_;
    httplib::Server http_;
    int bound_port_ = -1;
};

} // namespace ctsne::server

#endif
