#pragma once

// Session-oriented HTTP/1.1 JSON service under /api/v1.
//
//   POST /api/v1/sessions                      {"dataset": "a0003"} | {"seed": 7, "n_kits": 2}
//   GET  /api/v1/sessions/{id}/scene
//   POST /api/v1/sessions/{id}/goals           {"goals": [{"object_id": 1, "pose": {...}}]}
//   GET  /api/v1/sessions/{id}/plans/{pid}
//   GET  /api/v1/meshes/{hash}.obj
//
// Errors come back as {"code": "...", "message": "..."}.

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "seat/bench.hpp"
#include "seat/io.hpp"
#include "seat/pipeline.hpp"
#include "seat/plan.hpp"

#include <httplib.h>

namespace seat {

struct ServiceConfig {
    fs::path dataset;  // empty: seed-only sessions
    std::string completion = "oracle";
    std::string kit_completion = "visual_hull";
    SnapConfig snap;
    double margin = 0.0025;  // seeded sessions
    int default_kits = 2;    // seeded sessions
};

inline int http_status(ErrorCode c) {
    switch (c) {
    case ErrorCode::invalid_argument:
    case ErrorCode::out_of_bounds:
    case ErrorCode::empty_input: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    default: return 500;
    }
}

inline std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Content-addressed OBJ store shared by all sessions.
class MeshStore {
public:
    std::string put(const TriMesh& m) {
        std::string obj = to_obj_string(m);
        std::string h = fnv1a_hex(obj);
        std::lock_guard<std::mutex> lk(m_);
        store_.emplace(h, std::make_shared<const std::string>(std::move(obj)));
        return h;
    }
    std::shared_ptr<const std::string> get(const std::string& hash) const {
        std::lock_guard<std::mutex> lk(m_);
        auto it = store_.find(hash);
        return it == store_.end() ? nullptr : it->second;
    }

private:
    mutable std::mutex m_;
    std::map<std::string, std::shared_ptr<const std::string>> store_;
};

struct SceneSnapshot {
    std::uint64_t revision = 0;
    Scene scene;  // current object poses live in gt_start
};

struct PlanRecord {
    std::string id;
    int object_id = 0;
    ActionPlan plan;
    std::string status = "queued";  // queued | running | done | failed
    std::string reason;
    std::uint64_t resulting_revision = 0;
};

class Session {
public:
    Session(std::string id, Scene scene, const ServiceConfig& cfg, MeshStore& meshes)
        : id_(std::move(id)), cfg_(cfg) {
        obs_ = observe(scene);
        completed_ = complete_scene(scene, obs_, cfg.completion, cfg.kit_completion);
        world_ = make_sim_world(scene);
        for (const auto& o : scene.objects) {
            const Pose frame = obs_.object_frames.at(o.id);
            object_mesh_.emplace(o.id, meshes.put(transformed(occupancy_to_mesh(completed_.objects.at(o.id)), frame.inverse())));
        }
        if (!completed_.kit.empty()) kit_mesh_ = meshes.put(occupancy_to_mesh(completed_.kit));
        auto snap = std::make_shared<SceneSnapshot>();
        snap->revision = 1;
        snap->scene = std::move(scene);
        snapshot_ = std::move(snap);
        worker_ = std::thread([this] { run_executor(); });
    }

    ~Session() {
        {
            std::lock_guard<std::mutex> lk(queue_m_);
            stop_ = true;
        }
        queue_cv_.notify_all();
        if (worker_.joinable()) worker_.join();
    }

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const { return id_; }

    std::shared_ptr<const SceneSnapshot> snapshot() const {
        std::lock_guard<std::mutex> lk(snap_m_);
        return snapshot_;
    }

    json descriptor() const {
        auto s = snapshot();
        json objs = json::array(), cavs = json::array();
        for (const auto& o : s->scene.objects) objs.push_back(o.id);
        for (std::size_t i = 0; i < s->scene.assembly.kits.size(); ++i)
            cavs.push_back({{"object_id", s->scene.assembly.kits[i].object_id},
                            {"pose", pose_to_json(s->scene.assembly.cavity_world(i))}});
        return {{"session_id", id_}, {"revision", s->revision}, {"objects", objs}, {"cavities", cavs}};
    }

    json scene_json() const {
        auto s = snapshot();
        json objs = json::array();
        for (const auto& o : s->scene.objects)
            objs.push_back({{"id", o.id}, {"mesh_url", "/api/v1/meshes/" + object_mesh_.at(o.id) + ".obj"},
                            {"pose", pose_to_json(o.gt_start)}});
        json out = {{"revision", s->revision}, {"objects", objs}, {"bounds", aabb_to_json(s->scene.workspace)}};
        out["kit"] = kit_mesh_.empty() ? json(nullptr)
                                       : json{{"mesh_url", "/api/v1/meshes/" + kit_mesh_ + ".obj"},
                                              {"pose", pose_to_json(Pose::identity())}};
        return out;
    }

    /// Snaps and plans every goal, queues the plans for execution and
    /// returns before they run.
    json post_goals(const json& body) {
        require(body.is_object() && body.contains("goals") && body.at("goals").is_array() && !body.at("goals").empty(),
                ErrorCode::invalid_argument, "body must be {\"goals\": [...]} with at least one goal");
        auto snap = snapshot();
        std::vector<std::pair<int, Pose>> goals;
        for (const auto& g : body.at("goals")) {
            require(g.is_object() && g.contains("object_id") && g.at("object_id").is_number_integer() && g.contains("pose"),
                    ErrorCode::invalid_argument, "goal needs integer object_id and pose");
            int id = g.at("object_id").get<int>();
            snap->scene.object(id);
            Pose p = pose_from_json(g.at("pose"));
            require(snap->scene.workspace.contains(p.p), ErrorCode::invalid_argument, "goal position outside the workspace");
            for (const auto& prev : goals)
                require(prev.first != id, ErrorCode::invalid_argument, "duplicate goal for object " + std::to_string(id));
            goals.emplace_back(id, p);
        }
        std::sort(goals.begin(), goals.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

        std::lock_guard<std::mutex> writer(write_m_);
        {
            std::lock_guard<std::mutex> lk(queue_m_);
            if (!queue_.empty() || running_) fail(ErrorCode::conflict, "session is executing a plan");
        }
        snap = snapshot();
        json snapped = json::array(), plan_ids = json::array();
        std::vector<std::string> ids;
        for (const auto& [oid, hint] : goals) {
            SnapConfig sc = cfg_.snap;
            sc.uninformed = false;
            sc.seed = hash_seed(sc.seed, static_cast<std::uint64_t>(oid));
            SnapResult r = snap_object(obs_, completed_, oid, hint, sc);
            json sj = snap_result_to_json(r);
            sj["object_id"] = oid;
            snapped.push_back(sj);

            PlanRecord rec;
            rec.id = id_ + "-p" + std::to_string(++plan_counter_);
            rec.object_id = oid;
            rec.plan = plan_for(snap->scene, oid, r.pose);
            {
                std::lock_guard<std::mutex> lk(plans_m_);
                plans_[rec.id] = rec;
            }
            ids.push_back(rec.id);
            plan_ids.push_back(rec.id);
        }
        std::uint64_t rev = bump(nullptr);
        {
            std::lock_guard<std::mutex> lk(queue_m_);
            for (auto& i : ids) queue_.push_back(i);
        }
        queue_cv_.notify_all();
        return {{"revision", rev}, {"snapped", snapped}, {"plan_ids", plan_ids}};
    }

    /// Holds queued plans until unpaused. A plan already running finishes.
    void set_paused(bool paused) {
        {
            std::lock_guard<std::mutex> lk(queue_m_);
            paused_ = paused;
        }
        queue_cv_.notify_all();
    }

    json plan_status(const std::string& pid) const {
        std::lock_guard<std::mutex> lk(plans_m_);
        auto it = plans_.find(pid);
        require(it != plans_.end(), ErrorCode::not_found, "unknown plan " + pid);
        const PlanRecord& r = it->second;
        json out = {{"plan_id", r.id}, {"status", r.status}, {"reason", r.reason}, {"plan", plan_to_json(r.plan)}};
        out["resulting_revision"] = r.resulting_revision == 0 ? json(nullptr) : json(r.resulting_revision);
        return out;
    }

private:
    ActionPlan plan_for(const Scene& scene, int oid, const Pose& place) const {
        const SceneObject& o = scene.object(oid);
        const Pose frame = obs_.object_frames.at(oid);
        const Pose moved = o.gt_start * frame.inverse();  // observation frame -> current
        ActionPlan plan;
        try {
            Pose grasp = moved * grasp_pose_topdown(completed_.objects.at(oid), frame);
            plan = make_plan(grasp, place, o.gt_start, oid);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::not_graspable) throw;
            plan.object_id = oid;
            plan.place = place;
            plan.hover = hover_pose(place);
            plan.feasible = false;
            plan.reason = "not-graspable";
            return plan;
        }
        plan.feasible = check_straight_insertion(completed_.objects.at(oid), frame, completed_.kit, plan);
        plan.reason = plan.feasible ? "ok" : "collision-on-insert";
        return plan;
    }

    /// Publishes a new snapshot (scene replaced when given) with revision + 1.
    std::uint64_t bump(const Scene* scene) {
        std::lock_guard<std::mutex> lk(snap_m_);
        auto next = std::make_shared<SceneSnapshot>();
        next->revision = snapshot_->revision + 1;
        next->scene = scene ? *scene : snapshot_->scene;
        snapshot_ = next;
        return next->revision;
    }

    void run_executor() {
        for (;;) {
            std::string pid;
            {
                std::unique_lock<std::mutex> lk(queue_m_);
                queue_cv_.wait(lk, [&] { return stop_ || (!paused_ && !queue_.empty()); });
                if (stop_) return;
                pid = queue_.front();
                queue_.pop_front();
                running_ = true;
            }
            ActionPlan plan;
            {
                std::lock_guard<std::mutex> lk(plans_m_);
                plans_[pid].status = "running";
                plan = plans_[pid].plan;
            }
            std::string status = "failed", reason;
            std::uint64_t rev = 0;
            try {
                ExecutionResult ex;
                if (plan.feasible) {
                    ex = execute_plan_sim(snapshot()->scene, plan, world_);
                } else {
                    ex.reason = plan.reason;
                }
                reason = ex.reason;
                if (ex.success) {
                    rev = bump(&ex.scene);
                    status = "done";
                } else {
                    rev = snapshot()->revision;
                }
            } catch (const std::exception& e) {
                reason = e.what();
                rev = snapshot()->revision;
            }
            {
                std::lock_guard<std::mutex> lk(plans_m_);
                plans_[pid].status = status;
                plans_[pid].reason = reason;
                plans_[pid].resulting_revision = rev;
            }
            {
                std::lock_guard<std::mutex> lk(queue_m_);
                running_ = false;
            }
        }
    }

    std::string id_;
    ServiceConfig cfg_;
    Observation obs_;
    CompletedScene completed_;
    SimWorld world_;
    std::map<int, std::string> object_mesh_;
    std::string kit_mesh_;

    mutable std::mutex snap_m_;
    std::shared_ptr<const SceneSnapshot> snapshot_;

    std::mutex write_m_;
    std::uint64_t plan_counter_ = 0;

    mutable std::mutex plans_m_;
    std::map<std::string, PlanRecord> plans_;

    std::mutex queue_m_;
    std::condition_variable queue_cv_;
    std::deque<std::string> queue_;
    bool running_ = false;
    bool paused_ = false;
    bool stop_ = false;
    std::thread worker_;
};

class TeleopService {
public:
    explicit TeleopService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.snap.validate();
        require(has_completion(cfg_.completion) && has_completion(cfg_.kit_completion), ErrorCode::invalid_argument,
                "unknown completion mode");
        std::random_device rd;
        token_rng_.seed((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
        register_routes();
    }

    httplib::Server& server() { return server_; }

    /// Serves static files from `dir` at /.
    bool mount_ui(const std::string& dir) { return server_.set_mount_point("/", dir); }

    std::shared_ptr<Session> create_session(const json& body) {
        require(body.is_object(), ErrorCode::invalid_argument, "body must be a JSON object");
        Scene scene;
        if (body.contains("dataset")) {
            require(body.at("dataset").is_string(), ErrorCode::invalid_argument, "dataset must be a string");
            std::string ref = body.at("dataset").get<std::string>();
            require(!cfg_.dataset.empty(), ErrorCode::not_found, "service has no dataset");
            bool known = false;
            for (const auto& e : list_dataset(cfg_.dataset)) known = known || e.id == ref;
            require(known, ErrorCode::not_found, "unknown dataset entry '" + ref + "'");
            scene = load_scene(cfg_.dataset / ref);
        } else if (body.contains("seed")) {
            require(body.at("seed").is_number_unsigned() || body.at("seed").is_number_integer(), ErrorCode::invalid_argument,
                    "seed must be an integer");
            require(!body.at("seed").is_number_integer() || body.at("seed").get<std::int64_t>() >= 0,
                    ErrorCode::invalid_argument, "seed must be >= 0");
            auto seed = body.at("seed").get<std::uint64_t>();
            int n = cfg_.default_kits;
            if (body.contains("n_kits")) {
                require(body.at("n_kits").is_number_integer(), ErrorCode::invalid_argument, "n_kits must be an integer");
                n = body.at("n_kits").get<int>();
            }
            require(n >= 1 && n <= 5, ErrorCode::invalid_argument, "n_kits must lie in [1, 5]");
            scene = seeded_scene(seed, n);
        } else {
            fail(ErrorCode::invalid_argument, "body needs \"dataset\" or \"seed\"");
        }
        auto s = std::make_shared<Session>(new_token(), std::move(scene), cfg_, meshes_);
        std::lock_guard<std::mutex> lk(sessions_m_);
        sessions_[s->id()] = s;
        return s;
    }

    std::shared_ptr<Session> session(const std::string& id) const {
        std::lock_guard<std::mutex> lk(sessions_m_);
        auto it = sessions_.find(id);
        require(it != sessions_.end(), ErrorCode::not_found, "unknown session " + id);
        return it->second;
    }

    const MeshStore& meshes() const { return meshes_; }

private:
    Scene seeded_scene(std::uint64_t seed, int n_kits) const {
        for (std::uint64_t attempt = 0; attempt < 20; ++attempt) {
            try {
                return make_random_scene({}, n_kits, cfg_.margin, hash_seed(seed, attempt));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::placement_error && e.code() != ErrorCode::workspace_full) throw;
            }
        }
        fail(ErrorCode::placement_error, "could not build a scene for seed " + std::to_string(seed));
    }

    std::string new_token() {
        std::lock_guard<std::mutex> lk(sessions_m_);
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(token_rng_()));
        return buf;
    }

    template <class F>
    static void guarded(httplib::Response& res, F f) {
        auto error = [&](int status, const std::string& code, const std::string& msg) {
            res.status = status;
            res.set_content(json{{"code", code}, {"message", msg}}.dump(-1, ' ', false, json::error_handler_t::replace),
                            "application/json");
        };
        try {
            f();
        } catch (const Error& e) {
            error(http_status(e.code()), std::string(to_string(e.code())), e.what());
        } catch (const json::exception& e) {
            error(400, "invalid_argument", e.what());
        } catch (const std::exception& e) {
            error(500, "internal", e.what());
        }
    }

    static json parse_body(const httplib::Request& req) {
        try {
            return json::parse(req.body);
        } catch (const json::exception& e) {
            fail(ErrorCode::invalid_argument, std::string("malformed JSON: ") + e.what());
        }
    }

    static void reply(httplib::Response& res, const json& j, int status = 200) {
        res.status = status;
        res.set_content(j.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
    }

    void register_routes() {
        server_.Post("/api/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { reply(res, create_session(parse_body(req))->descriptor(), 201); });
        });
        server_.Get(R"(/api/v1/sessions/([^/]+)/scene)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { reply(res, session(req.matches[1])->scene_json()); });
        });
        server_.Post(R"(/api/v1/sessions/([^/]+)/goals)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto s = session(req.matches[1]);
                reply(res, s->post_goals(parse_body(req)), 202);
            });
        });
        server_.Get(R"(/api/v1/sessions/([^/]+)/plans/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { reply(res, session(req.matches[1])->plan_status(req.matches[2])); });
        });
        server_.Get(R"(/api/v1/meshes/([0-9a-f]+)\.obj)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto m = meshes_.get(req.matches[1]);
                require(m != nullptr, ErrorCode::not_found, "unknown mesh");
                res.set_content(*m, "text/plain");
            });
        });
    }

    ServiceConfig cfg_;
    httplib::Server server_;
    MeshStore meshes_;
    mutable std::mutex sessions_m_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::mt19937_64 token_rng_;
};

}  // namespace seat
