#include "cronus/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "cronus/balancer.hpp"
#include "cronus/costmodel.hpp"
#include "cronus/policies.hpp"

namespace cronus {

namespace {

constexpr double kEps = 1e-9;

enum class Ev {
    Arrival,
    SerialDone,
    ChunkedIterDone,
    TransferDone,
    Notify,
    PpPassStart,
    PpStage0Done,
    PpPassEnd,
};

const char* ev_name(Ev e) {
    switch (e) {
        case Ev::Arrival: return "arrival";
        case Ev::SerialDone: return "serial-done";
        case Ev::ChunkedIterDone: return "iter-done";
        case Ev::TransferDone: return "transfer-done";
        case Ev::Notify: return "notify";
        case Ev::PpPassStart: return "pp-pass-start";
        case Ev::PpStage0Done: return "pp-stage0-done";
        case Ev::PpPassEnd: return "pp-pass-end";
    }
    return "?";
}

struct Event {
    double t;
    uint64_t seq;
    Ev kind;
    int a = -1;
};

struct EvCmp {
    bool operator()(const Event& x, const Event& y) const {
        if (x.t != y.t) return x.t > y.t;
        return x.seq > y.seq;
    }
};

struct RState {
    Request rq;
    int partial_len = 0;
    bool full_on_ppi = false;
    int assigned = -1;
    double first_token = -1.0;
    std::vector<double> tokens;
    bool failed = false;
    bool done = false;
};

struct RunEnt {
    int rid = -1;
    long long need = 0;      // prefill tokens this instance must account for
    long long done_tok = 0;  // prefill tokens already in the KV cache
    int emitted = 0;         // output tokens produced so far
    long long reserved = 0;  // lifetime KV blocks reserved at admission
    long long reserved2 = 0; // second PP stage only
};

long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

struct ChunkedInst {
    int idx = 0;
    std::string name;
    Role role = Role::DpEngine;
    const GpuProfile* prof = nullptr;
    int B = 512;
    long long cap = 0, reserved = 0, alloc = 0;
    std::deque<int> waiting;  // admission queue
    std::deque<int> pending;  // cronus CPI: dispatched, KV transfer not yet started
    int in_transfer = 0;
    std::vector<RunEnt> running;
    bool busy = false;
    int chunk_rid = -1;
    long long chunk = 0;
    std::vector<int> iter_decoders, iter_finishers;
    uint64_t iters = 0;
    long long prefill_tok = 0, decode_tok = 0;
    int completions = 0;
    double busy_ms = 0;
};

struct SerialInst {
    int idx = 0;
    std::string name;
    Role role = Role::PPI;
    const GpuProfile* prof = nullptr;
    long long cap = 0, alloc = 0;
    std::deque<int> waiting;
    int cur = -1;
    long long cur_blocks = 0;
    bool busy = false;
    std::map<int, long long> buffer;  // finished KV held until its transfer completes
    uint64_t iters = 0;
    long long prefill_tok = 0;
    int completions = 0;
    double busy_ms = 0;
};

struct PpStageState {
    std::string name;
    const GpuProfile* prof = nullptr;
    double layer_frac = 1.0;  // layers on this stage / total layers
    long long cap = 0, reserved = 0, alloc = 0;
    double free_at = 0;
    double busy_ms = 0;
    uint64_t iters = 0;
    long long prefill_tok = 0, decode_tok = 0;
    int completions = 0;
};

struct PpMicroBatch {
    std::vector<RunEnt> running;
    std::deque<int> waiting;
    bool in_pass = false;
    bool start_scheduled = false;
    double ready_at = 0;
    int chunk_rid = -1;
    long long chunk = 0;
    double pctx = 0, ctxd = 0;
    std::vector<int> iter_decoders, iter_finishers;
};

struct Transfer {
    int rid;
    long long tokens;
    double start, end;
};

class Simulation {
  public:
    Simulation(const ClusterConfig& cfg, const Trace& trace, const RunOptions& opts)
        : cfg_(cfg), trace_(trace), opts_(opts), binding_(bind_policy(cfg)) {}

    RunReport run();

  private:
    const ClusterConfig& cfg_;
    const Trace& trace_;
    const RunOptions& opts_;
    PolicyBinding binding_;

    std::vector<RState> rs_;
    std::priority_queue<Event, std::vector<Event>, EvCmp> pq_;
    uint64_t seq_ = 0;
    double now_ = 0;
    std::vector<std::string> viol_;

    std::vector<ChunkedInst> chunked_;
    std::vector<SerialInst> serial_;

    bool is_pp_ = false;
    PpStageState pst_[2];
    PpMicroBatch pmb_[2];

    double link_free_ = 0;
    std::vector<Transfer> transfers_;

    std::deque<int> frontq_;
    int dp_pos_ = 0;
    int n_done_ = 0, n_failed_ = 0;

    void violation(const std::string& msg) {
        if (viol_.size() < 100) viol_.push_back(msg);
    }

    void log_event(const char* inst, Ev kind, int rid) {
        if (!opts_.event_log) return;
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%.6f %s %s %d\n", now_, inst, ev_name(kind), rid);
        *opts_.event_log << buf;
    }

    void schedule(double t, Ev kind, int a) {
        pq_.push(Event{t, seq_++, kind, a});
    }

    long long life_blocks(const Request& q, const GpuProfile& g) const {
        return ceil_div(q.input_len + q.output_len, g.kv_block_size);
    }

    void build();
    void route_arrival(int rid);
    void dispatch(const Event& e);
    void settle();
    void idle_scan();

    bool pump_cronus();
    bool pump_dp();
    bool cpi_start_transfers(ChunkedInst& ci);
    bool chunked_admit(ChunkedInst& ci);
    bool chunked_try_start(ChunkedInst& ci);
    void chunked_iter_done(ChunkedInst& ci);
    void update_alloc(ChunkedInst& ci);
    bool serial_try_start(SerialInst& si);
    void serial_done(SerialInst& si);
    void start_transfer(int rid, long long tokens);
    void transfer_done(int tidx);
    void fail_request(int rid, const std::string& where);
    void complete_request(int rid);
    void emit_first_token(int rid, double t);
    void emit_decode_token(int rid, double t);

    // pipeline parallelism
    bool pp_other_empty(int m) const;
    long long pp_stage_blocks(int s, long long tokens) const;
    bool pp_admissible(int m, int rid) const;
    bool pp_can_start(int m) const;
    bool pp_try_start(int m);
    void pp_begin_pass(int m);
    void pp_stage0_done(int m);
    void pp_pass_end(int m);
    void pp_update_alloc();

    RunReport make_report();
};

void Simulation::build() {
    auto mk_chunked = [&](Role role, bool high, int B) {
        ChunkedInst ci;
        ci.idx = static_cast<int>(chunked_.size());
        ci.role = role;
        ci.prof = high ? &cfg_.high_gpu : &cfg_.low_gpu;
        ci.B = B;
        ci.cap = ci.prof->kv_blocks_capacity;
        chunked_.push_back(std::move(ci));
    };
    auto mk_serial = [&](Role role, bool high) {
        SerialInst si;
        si.idx = static_cast<int>(serial_.size());
        si.role = role;
        si.prof = high ? &cfg_.high_gpu : &cfg_.low_gpu;
        si.cap = si.prof->kv_blocks_capacity;
        serial_.push_back(std::move(si));
    };
    for (const auto& spec : binding_.instances) {
        switch (spec.role) {
            case Role::PPI:
            case Role::PurePrefill:
                mk_serial(spec.role, spec.on_high_gpu);
                serial_.back().name = spec.name;
                break;
            case Role::CPI:
            case Role::PureDecode:
            case Role::DpEngine:
                mk_chunked(spec.role, spec.on_high_gpu, spec.max_batched_tokens);
                chunked_.back().name = spec.name;
                break;
            case Role::PpStage: {
                is_pp_ = true;
                PpStageState& st = pst_[spec.index];
                st.name = spec.name;
                st.prof = spec.on_high_gpu ? &cfg_.high_gpu : &cfg_.low_gpu;
                int layers = spec.index == 0 ? cfg_.pp_layers_high : cfg_.pp_layers_low;
                st.layer_frac = static_cast<double>(layers) / st.prof->total_layers;
                st.cap = st.prof->kv_blocks_capacity;
                break;
            }
        }
    }
    rs_.resize(trace_.requests.size());
    for (size_t i = 0; i < trace_.requests.size(); ++i) {
        rs_[i].rq = trace_.requests[i];
        schedule(trace_.requests[i].arrival_ms, Ev::Arrival, static_cast<int>(i));
    }
}

void Simulation::route_arrival(int rid) {
    log_event("frontend", Ev::Arrival, rs_[rid].rq.id);
    switch (cfg_.policy) {
        case Policy::Cronus:
        case Policy::DpChunked:
            frontq_.push_back(rid);
            break;
        case Policy::DisaggHighLow:
        case Policy::DisaggLowHigh:
            serial_[0].waiting.push_back(rid);
            break;
        case Policy::PpChunked: {
            size_t a = pmb_[0].running.size() + pmb_[0].waiting.size();
            size_t b = pmb_[1].running.size() + pmb_[1].waiting.size();
            pmb_[a <= b ? 0 : 1].waiting.push_back(rid);
            break;
        }
    }
}

void Simulation::emit_first_token(int rid, double t) {
    RState& r = rs_[rid];
    r.first_token = t;
    r.tokens.push_back(t);
}

void Simulation::emit_decode_token(int rid, double t) {
    rs_[rid].tokens.push_back(t);
}

void Simulation::fail_request(int rid, const std::string& where) {
    rs_[rid].failed = true;
    ++n_failed_;
    log_event(where.c_str(), Ev::Arrival, rs_[rid].rq.id);
}

void Simulation::complete_request(int rid) {
    rs_[rid].done = true;
    ++n_done_;
}

bool Simulation::pump_cronus() {
    bool changed = false;
    SerialInst& ppi = serial_[0];
    ChunkedInst& cpi = chunked_[0];
    while (!frontq_.empty()) {
        if (!ppi.waiting.empty()) break;
        int inflight = (ppi.cur >= 0 ? 1 : 0) + static_cast<int>(ppi.waiting.size());
        if (inflight >= cfg_.ppi_max_inflight) break;
        int rid = frontq_.front();
        frontq_.pop_front();
        CpiStats st;
        st.max_batched_tokens = cpi.B;
        st.free_kv_blocks = cpi.cap - cpi.reserved;
        for (const auto& e : cpi.running) {
            if (e.done_tok == e.need && e.emitted >= 1) {
                st.n_decode++;
                st.decode_ctx_sum += e.need + e.emitted;
            }
        }
        SplitDecision dec =
            choose_split(cfg_.low_gpu, cfg_.high_gpu, st, rs_[rid].rq.input_len);
        rs_[rid].partial_len = dec.partial_len;
        rs_[rid].full_on_ppi = dec.full_on_ppi;
        ppi.waiting.push_back(rid);
        changed = true;
    }
    return changed;
}

bool Simulation::pump_dp() {
    bool changed = false;
    const int wh = cfg_.dp_weight_high, wl = cfg_.dp_weight_low;
    const int cycle = wh + wl;
    while (!frontq_.empty()) {
        bool to_high = dp_pos_ < wh;
        ChunkedInst& eng = chunked_[to_high ? 0 : 1];
        int qcap = to_high ? cfg_.dp_queue_cap_high : cfg_.dp_queue_cap_low;
        if (static_cast<int>(eng.waiting.size()) >= qcap) break;  // held at frontend
        int rid = frontq_.front();
        frontq_.pop_front();
        rs_[rid].assigned = to_high ? 0 : 1;
        eng.waiting.push_back(rid);
        dp_pos_ = (dp_pos_ + 1) % cycle;
        changed = true;
    }
    return changed;
}

bool Simulation::cpi_start_transfers(ChunkedInst& ci) {
    bool changed = false;
    SerialInst& ppi = serial_[0];
    while (!ci.pending.empty()) {
        int rid = ci.pending.front();
        const Request& q = rs_[rid].rq;
        long long life = life_blocks(q, *ci.prof);
        if (life > ci.cap) {
            ci.pending.pop_front();
            ppi.alloc -= ppi.buffer[rid];
            ppi.buffer.erase(rid);
            fail_request(rid, ci.name);
            changed = true;
            continue;
        }
        if (static_cast<long long>(ci.running.size()) + ci.in_transfer >= ci.B) break;
        if (ci.reserved + life > ci.cap) break;
        ci.reserved += life;
        ci.in_transfer++;
        ci.pending.pop_front();
        start_transfer(rid, rs_[rid].partial_len);
        changed = true;
    }
    return changed;
}

bool Simulation::chunked_admit(ChunkedInst& ci) {
    bool changed = false;
    while (!ci.waiting.empty()) {
        int rid = ci.waiting.front();
        const Request& q = rs_[rid].rq;
        long long N = ci.prof->kv_block_size;
        long long life = life_blocks(q, *ci.prof);
        if (ceil_div(q.input_len, N) > ci.cap || life > ci.cap) {
            ci.waiting.pop_front();
            fail_request(rid, ci.name);
            changed = true;
            continue;
        }
        if (static_cast<long long>(ci.running.size()) >= ci.B) break;
        if (ci.reserved + life > ci.cap) break;
        ci.reserved += life;
        RunEnt e;
        e.rid = rid;
        e.need = q.input_len;
        e.reserved = life;
        if (ci.role == Role::PureDecode) {
            e.done_tok = q.input_len;  // KV arrived via the link
            e.emitted = 1;             // first token emitted at transfer completion
        }
        ci.running.push_back(e);
        ci.waiting.pop_front();
        changed = true;
    }
    if (changed) update_alloc(ci);
    return changed;
}

bool Simulation::chunked_try_start(ChunkedInst& ci) {
    if (ci.busy) return false;
    int n_d = 0;
    long long ctxd = 0;
    ci.iter_decoders.clear();
    ci.iter_finishers.clear();
    ci.chunk_rid = -1;
    ci.chunk = 0;
    const RunEnt* head = nullptr;
    for (const auto& e : ci.running) {
        if (e.done_tok == e.need) {
            if (e.emitted >= 1) {
                ++n_d;
                ctxd += e.need + e.emitted;
                ci.iter_decoders.push_back(e.rid);
            } else {
                ci.iter_finishers.push_back(e.rid);  // zero-remaining prefill (handoff)
            }
        } else if (!head) {
            head = &e;
        }
    }
    long long budget = ci.B - n_d;
    if (head && budget > 0) {
        ci.chunk = std::min(budget, head->need - head->done_tok);
        ci.chunk_rid = head->rid;
    }
    if (n_d == 0 && ci.chunk == 0 && ci.iter_finishers.empty()) return false;
    double pctx = 0;
    if (ci.chunk > 0)
        pctx = static_cast<double>(head->done_tok + ci.chunk);
    else if (!ci.iter_finishers.empty())
        pctx = static_cast<double>(rs_[ci.iter_finishers.front()].rq.input_len);
    long long batched = n_d + ci.chunk;
    if (batched > ci.B)
        violation(ci.name + ": batched tokens " + std::to_string(batched) + " > B");
    double dur = chunked_iter_time(*ci.prof, pctx, static_cast<double>(ctxd));
    ci.busy = true;
    ci.iters++;
    ci.busy_ms += dur;
    log_event(ci.name.c_str(), Ev::ChunkedIterDone, ci.chunk_rid >= 0 ? rs_[ci.chunk_rid].rq.id : -1);
    schedule(now_ + dur, Ev::ChunkedIterDone, ci.idx);
    return true;
}

void Simulation::chunked_iter_done(ChunkedInst& ci) {
    auto find = [&](int rid) -> RunEnt& {
        for (auto& e : ci.running)
            if (e.rid == rid) return e;
        throw std::logic_error("running entry vanished");
    };
    std::vector<int> finished;
    if (ci.chunk_rid >= 0) {
        RunEnt& e = find(ci.chunk_rid);
        e.done_tok += ci.chunk;
        ci.prefill_tok += ci.chunk;
        if (e.done_tok == e.need) ci.iter_finishers.push_back(e.rid);
    }
    for (int rid : ci.iter_decoders) {
        RunEnt& e = find(rid);
        e.emitted++;
        ci.decode_tok++;
        emit_decode_token(rid, now_);
        if (e.emitted == rs_[rid].rq.output_len) finished.push_back(rid);
    }
    for (int rid : ci.iter_finishers) {
        RunEnt& e = find(rid);
        e.emitted = 1;
        emit_first_token(rid, now_);
        if (rs_[rid].rq.output_len == 1) finished.push_back(rid);
    }
    for (int rid : finished) {
        RunEnt& e = find(rid);
        ci.reserved -= e.reserved;
        ci.completions++;
        complete_request(rid);
        ci.running.erase(std::find_if(ci.running.begin(), ci.running.end(),
                                      [&](const RunEnt& x) { return x.rid == rid; }));
    }
    update_alloc(ci);
    ci.busy = false;
    ci.chunk_rid = -1;
    ci.chunk = 0;
}

void Simulation::update_alloc(ChunkedInst& ci) {
    long long a = 0;
    for (const auto& e : ci.running)
        a += ceil_div(e.done_tok + e.emitted, ci.prof->kv_block_size);
    ci.alloc = a;
    if (ci.alloc > ci.cap)
        violation(ci.name + ": KV allocation " + std::to_string(ci.alloc) + " > capacity");
    if (ci.reserved > ci.cap)
        violation(ci.name + ": KV reservation " + std::to_string(ci.reserved) + " > capacity");
}

bool Simulation::serial_try_start(SerialInst& si) {
    if (si.busy) return false;
    bool changed = false;
    while (!si.waiting.empty()) {
        int rid = si.waiting.front();
        long long len = si.role == Role::PPI ? rs_[rid].partial_len : rs_[rid].rq.input_len;
        long long blocks = ceil_div(len, si.prof->kv_block_size);
        if (blocks > si.cap) {
            si.waiting.pop_front();
            fail_request(rid, si.name);
            changed = true;
            continue;
        }
        if (si.alloc + blocks > si.cap) break;  // wait for buffered KV to drain
        si.waiting.pop_front();
        si.cur = rid;
        si.cur_blocks = blocks;
        si.alloc += blocks;
        double dur = prefill_time(*si.prof, static_cast<double>(len));
        si.busy = true;
        si.iters++;
        si.busy_ms += dur;
        si.prefill_tok += len;
        log_event(si.name.c_str(), Ev::SerialDone, rs_[rid].rq.id);
        schedule(now_ + dur, Ev::SerialDone, si.idx);
        changed = true;
        break;
    }
    return changed;
}

void Simulation::serial_done(SerialInst& si) {
    int rid = si.cur;
    si.cur = -1;
    si.busy = false;
    si.completions++;
    si.buffer[rid] = si.cur_blocks;
    log_event(si.name.c_str(), Ev::SerialDone, rs_[rid].rq.id);
    if (si.role == Role::PPI) {
        schedule(now_, Ev::Notify, rid);  // frontend forwards to the CPI
    } else {
        start_transfer(rid, rs_[rid].rq.input_len);
    }
}

void Simulation::start_transfer(int rid, long long tokens) {
    double begin = std::max(now_, link_free_);
    double end = begin + transfer_time(cfg_.link, tokens);
    link_free_ = end;
    transfers_.push_back(Transfer{rid, tokens, begin, end});
    log_event("link", Ev::TransferDone, rs_[rid].rq.id);
    schedule(end, Ev::TransferDone, static_cast<int>(transfers_.size()) - 1);
}

void Simulation::transfer_done(int tidx) {
    int rid = transfers_[tidx].rid;
    log_event("link", Ev::TransferDone, rs_[rid].rq.id);
    SerialInst& src = serial_[0];
    src.alloc -= src.buffer[rid];
    src.buffer.erase(rid);
    if (cfg_.policy == Policy::Cronus) {
        ChunkedInst& cpi = chunked_[0];
        cpi.in_transfer--;
        RunEnt e;
        e.rid = rid;
        e.need = rs_[rid].rq.input_len;
        e.done_tok = rs_[rid].partial_len;  // transferred KV is never recomputed
        e.reserved = life_blocks(rs_[rid].rq, *cpi.prof);
        cpi.running.push_back(e);
        update_alloc(cpi);
    } else {
        // Disaggregated: TTFT includes the KV transfer.
        emit_first_token(rid, now_);
        if (rs_[rid].rq.output_len == 1)
            complete_request(rid);
        else
            chunked_[0].waiting.push_back(rid);
    }
}

// ---- pipeline parallelism -------------------------------------------------

bool Simulation::pp_other_empty(int m) const {
    const PpMicroBatch& o = pmb_[1 - m];
    return o.running.empty() && o.waiting.empty() && !o.in_pass;
}

long long Simulation::pp_stage_blocks(int s, long long tokens) const {
    long long stage_tokens =
        static_cast<long long>(std::ceil(tokens * pst_[s].layer_frac));
    return ceil_div(std::max(1ll, stage_tokens), pst_[s].prof->kv_block_size);
}

bool Simulation::pp_admissible(int m, int rid) const {
    const Request& q = rs_[rid].rq;
    int cap_n = pp_other_empty(m) ? cfg_.max_batched_tokens_high
                                  : cfg_.max_batched_tokens_high / 2;
    if (static_cast<int>(pmb_[m].running.size()) >= cap_n) return false;
    for (int s = 0; s < 2; ++s) {
        long long life = pp_stage_blocks(s, q.input_len + q.output_len);
        if (pst_[s].reserved + life > pst_[s].cap) return false;
    }
    return true;
}

bool Simulation::pp_can_start(int m) const {
    const PpMicroBatch& mb = pmb_[m];
    if (mb.in_pass) return false;
    if (!mb.running.empty()) return true;
    if (mb.waiting.empty()) return false;
    int rid = mb.waiting.front();
    const Request& q = rs_[rid].rq;
    for (int s = 0; s < 2; ++s)
        if (pp_stage_blocks(s, q.input_len) > pst_[s].cap) return true;  // will be failed
    return pp_admissible(m, rid);
}

bool Simulation::pp_try_start(int m) {
    PpMicroBatch& mb = pmb_[m];
    if (mb.in_pass || mb.start_scheduled) return false;
    if (!pp_can_start(m)) return false;
    double t0 = std::max({now_, mb.ready_at, pst_[0].free_at});
    if (t0 > now_ + kEps) {
        schedule(t0, Ev::PpPassStart, m);
        mb.start_scheduled = true;
        return true;
    }
    pp_begin_pass(m);
    return true;
}

void Simulation::pp_begin_pass(int m) {
    PpMicroBatch& mb = pmb_[m];
    while (!mb.waiting.empty()) {
        int rid = mb.waiting.front();
        const Request& q = rs_[rid].rq;
        bool unfit = false;
        for (int s = 0; s < 2; ++s)
            if (pp_stage_blocks(s, q.input_len) > pst_[s].cap ||
                pp_stage_blocks(s, q.input_len + q.output_len) > pst_[s].cap)
                unfit = true;
        if (unfit) {
            mb.waiting.pop_front();
            fail_request(rid, "pp");
            continue;
        }
        if (!pp_admissible(m, rid)) break;
        RunEnt e;
        e.rid = rid;
        e.need = q.input_len;
        e.reserved = pp_stage_blocks(0, q.input_len + q.output_len);
        e.reserved2 = pp_stage_blocks(1, q.input_len + q.output_len);
        pst_[0].reserved += e.reserved;
        pst_[1].reserved += e.reserved2;
        mb.running.push_back(e);
        mb.waiting.pop_front();
    }
    if (mb.running.empty()) return;

    // The engine-wide token budget is shared across in-flight micro-batches.
    int budget = pp_other_empty(m) ? cfg_.max_batched_tokens_high
                                   : cfg_.max_batched_tokens_high / 2;
    int n_d = 0;
    long long ctxd = 0;
    mb.iter_decoders.clear();
    mb.iter_finishers.clear();
    mb.chunk_rid = -1;
    mb.chunk = 0;
    const RunEnt* head = nullptr;
    for (const auto& e : mb.running) {
        if (e.done_tok == e.need) {
            if (e.emitted >= 1) {
                ++n_d;
                ctxd += e.need + e.emitted;
                mb.iter_decoders.push_back(e.rid);
            } else {
                mb.iter_finishers.push_back(e.rid);
            }
        } else if (!head) {
            head = &e;
        }
    }
    long long chunk_budget = std::max(0ll, static_cast<long long>(budget) - n_d);
    if (head && chunk_budget > 0) {
        mb.chunk = std::min(chunk_budget, head->need - head->done_tok);
        mb.chunk_rid = head->rid;
    }
    double pctx = 0;
    if (mb.chunk > 0)
        pctx = static_cast<double>(head->done_tok + mb.chunk);
    else if (!mb.iter_finishers.empty())
        pctx = static_cast<double>(rs_[mb.iter_finishers.front()].rq.input_len);
    if (n_d + mb.chunk > cfg_.max_batched_tokens_high)
        violation("pp: batched tokens exceed B");
    mb.pctx = pctx;
    mb.ctxd = static_cast<double>(ctxd);
    double t0 = pst_[0].layer_frac * chunked_iter_time(*pst_[0].prof, pctx, mb.ctxd);
    mb.in_pass = true;
    pst_[0].free_at = now_ + t0;
    pst_[0].busy_ms += t0;
    pst_[0].iters++;
    log_event(pst_[0].name.c_str(), Ev::PpPassStart,
              mb.chunk_rid >= 0 ? rs_[mb.chunk_rid].rq.id : -1);
    schedule(now_ + t0, Ev::PpStage0Done, m);
}

void Simulation::pp_stage0_done(int m) {
    PpMicroBatch& mb = pmb_[m];
    double s1 = std::max(now_ + cfg_.pp_comm_ms, pst_[1].free_at);
    double t1 = pst_[1].layer_frac * chunked_iter_time(*pst_[1].prof, mb.pctx, mb.ctxd);
    pst_[1].free_at = s1 + t1;
    pst_[1].busy_ms += t1;
    pst_[1].iters++;
    log_event(pst_[1].name.c_str(), Ev::PpStage0Done, -1);
    schedule(s1 + t1, Ev::PpPassEnd, m);
}

void Simulation::pp_pass_end(int m) {
    PpMicroBatch& mb = pmb_[m];
    auto find = [&](int rid) -> RunEnt& {
        for (auto& e : mb.running)
            if (e.rid == rid) return e;
        throw std::logic_error("pp running entry vanished");
    };
    std::vector<int> finished;
    if (mb.chunk_rid >= 0) {
        RunEnt& e = find(mb.chunk_rid);
        e.done_tok += mb.chunk;
        pst_[0].prefill_tok += mb.chunk;
        if (e.done_tok == e.need) mb.iter_finishers.push_back(e.rid);
    }
    for (int rid : mb.iter_decoders) {
        RunEnt& e = find(rid);
        e.emitted++;
        pst_[1].decode_tok++;
        emit_decode_token(rid, now_);
        if (e.emitted == rs_[rid].rq.output_len) finished.push_back(rid);
    }
    for (int rid : mb.iter_finishers) {
        RunEnt& e = find(rid);
        e.emitted = 1;
        emit_first_token(rid, now_);
        if (rs_[rid].rq.output_len == 1) finished.push_back(rid);
    }
    for (int rid : finished) {
        RunEnt& e = find(rid);
        pst_[0].reserved -= e.reserved;
        pst_[1].reserved -= e.reserved2;
        pst_[1].completions++;
        complete_request(rid);
        mb.running.erase(std::find_if(mb.running.begin(), mb.running.end(),
                                      [&](const RunEnt& x) { return x.rid == rid; }));
    }
    pp_update_alloc();
    mb.in_pass = false;
    mb.chunk_rid = -1;
    mb.chunk = 0;
    mb.ready_at = now_ + cfg_.pp_comm_ms;  // sampled token returns to stage 0
}

void Simulation::pp_update_alloc() {
    for (int s = 0; s < 2; ++s) {
        long long a = 0;
        for (int m = 0; m < 2; ++m)
            for (const auto& e : pmb_[m].running)
                a += pp_stage_blocks(s, e.done_tok + e.emitted);
        pst_[s].alloc = a;
        if (a > pst_[s].cap)
            violation(pst_[s].name + ": KV allocation " + std::to_string(a) + " > capacity");
        if (pst_[s].reserved > pst_[s].cap)
            violation(pst_[s].name + ": KV reservation > capacity");
    }
}

// ---- driver ---------------------------------------------------------------

void Simulation::settle() {
    bool again = true;
    while (again) {
        again = false;
        if (cfg_.policy == Policy::Cronus) again |= pump_cronus();
        if (cfg_.policy == Policy::DpChunked) again |= pump_dp();
        for (auto& si : serial_) again |= serial_try_start(si);
        for (auto& ci : chunked_) {
            if (ci.role == Role::CPI) again |= cpi_start_transfers(ci);
            again |= chunked_admit(ci);
            again |= chunked_try_start(ci);
        }
        if (is_pp_)
            for (int m = 0; m < 2; ++m) again |= pp_try_start(m);
    }
}

void Simulation::idle_scan() {
    for (const auto& ci : chunked_) {
        if (ci.busy) continue;
        bool runnable = false;
        for (const auto& e : ci.running) {
            (void)e;
            runnable = true;  // any running entry implies a runnable batch
            break;
        }
        if (!runnable && !ci.waiting.empty()) {
            int rid = ci.waiting.front();
            long long life = life_blocks(rs_[rid].rq, *ci.prof);
            if (static_cast<long long>(ci.running.size()) < ci.B &&
                ci.reserved + life <= ci.cap && life <= ci.cap)
                runnable = true;
        }
        if (runnable)
            violation(ci.name + ": idle at t=" + std::to_string(now_) +
                      " with runnable work");
    }
    for (const auto& si : serial_) {
        if (si.busy || si.waiting.empty()) continue;
        int rid = si.waiting.front();
        long long len = si.role == Role::PPI ? rs_[rid].partial_len : rs_[rid].rq.input_len;
        long long blocks = ceil_div(len, si.prof->kv_block_size);
        if (blocks <= si.cap && si.alloc + blocks <= si.cap)
            violation(si.name + ": idle at t=" + std::to_string(now_) +
                      " with runnable work");
    }
    if (is_pp_) {
        for (int m = 0; m < 2; ++m) {
            const PpMicroBatch& mb = pmb_[m];
            if (!mb.in_pass && !mb.start_scheduled && pp_can_start(m))
                violation("pp: micro-batch idle with runnable work");
        }
    }
}

void Simulation::dispatch(const Event& e) {
    switch (e.kind) {
        case Ev::Arrival:
            route_arrival(e.a);
            break;
        case Ev::SerialDone:
            serial_done(serial_[e.a]);
            break;
        case Ev::ChunkedIterDone:
            chunked_iter_done(chunked_[e.a]);
            break;
        case Ev::TransferDone:
            transfer_done(e.a);
            break;
        case Ev::Notify:
            log_event("frontend", Ev::Notify, rs_[e.a].rq.id);
            chunked_[0].pending.push_back(e.a);
            break;
        case Ev::PpPassStart:
            pmb_[e.a].start_scheduled = false;
            break;
        case Ev::PpStage0Done:
            pp_stage0_done(e.a);
            break;
        case Ev::PpPassEnd:
            pp_pass_end(e.a);
            break;
    }
}

RunReport Simulation::make_report() {
    RunReport rep;
    rep.policy = policy_name(cfg_.policy);
    rep.trace_name = trace_.name;
    rep.trace_hash = trace_hash(trace_);
    rep.n_requests = static_cast<int>(trace_.requests.size());
    double t0 = trace_.requests.front().arrival_ms;
    for (const auto& q : trace_.requests) t0 = std::min(t0, q.arrival_ms);
    rep.t_start_ms = t0;
    rep.t_end_ms = t0;
    for (const auto& r : rs_) {
        if (r.failed) {
            rep.failed_ids.push_back(r.rq.id);
            continue;
        }
        if (!r.done) continue;
        RequestRecord rec;
        rec.id = r.rq.id;
        rec.ttft_ms = r.first_token - r.rq.arrival_ms;
        rec.completion_ms = r.tokens.back();
        rec.partial_prefill_len = r.partial_len;
        rec.assigned_instance = r.assigned;
        for (size_t i = 1; i < r.tokens.size(); ++i)
            rec.tbt_samples_ms.push_back(r.tokens[i] - r.tokens[i - 1]);
        if (static_cast<int>(r.tokens.size()) != r.rq.output_len)
            violation("request " + std::to_string(r.rq.id) + ": emitted " +
                      std::to_string(r.tokens.size()) + " tokens, expected " +
                      std::to_string(r.rq.output_len));
        if (rec.ttft_ms > rec.completion_ms - r.rq.arrival_ms + kEps)
            violation("request " + std::to_string(r.rq.id) + ": ttft after completion");
        rep.records.push_back(std::move(rec));
    }
    if (n_done_ + n_failed_ < rep.n_requests) {
        std::string blocked;
        int listed = 0;
        for (const auto& r : rs_)
            if (!r.done && !r.failed && listed++ < 10)
                blocked += " " + std::to_string(r.rq.id);
        violation("deadlock: no runnable event with pending requests:" + blocked);
    }
    for (const auto& ci : chunked_) {
        if (ci.reserved != 0 || ci.alloc != 0)
            violation(ci.name + ": KV ledger not drained at quiescence");
        InstanceSummary s;
        s.name = ci.name;
        s.role = role_name(ci.role);
        s.iterations = ci.iters;
        s.prefill_tokens = ci.prefill_tok;
        s.decode_tokens = ci.decode_tok;
        s.completions = ci.completions;
        s.busy_ms = ci.busy_ms;
        rep.instances.push_back(std::move(s));
    }
    for (const auto& si : serial_) {
        if (si.alloc != 0 || !si.buffer.empty())
            violation(si.name + ": KV buffer not drained at quiescence");
        InstanceSummary s;
        s.name = si.name;
        s.role = role_name(si.role);
        s.iterations = si.iters;
        s.prefill_tokens = si.prefill_tok;
        s.completions = si.completions;
        s.busy_ms = si.busy_ms;
        rep.instances.push_back(std::move(s));
    }
    if (is_pp_) {
        for (int s = 0; s < 2; ++s) {
            if (pst_[s].reserved != 0 || pst_[s].alloc != 0)
                violation(pst_[s].name + ": KV ledger not drained at quiescence");
            InstanceSummary is;
            is.name = pst_[s].name;
            is.role = role_name(Role::PpStage);
            is.iterations = pst_[s].iters;
            is.prefill_tokens = pst_[s].prefill_tok;
            is.decode_tokens = pst_[s].decode_tok;
            is.completions = pst_[s].completions;
            is.busy_ms = pst_[s].busy_ms;
            rep.instances.push_back(std::move(is));
        }
    }
    rep.violations = viol_;
    finalize_report(rep);
    if (opts_.compute_utilization && rep.n_completed > 0) {
        switch (cfg_.policy) {
            case Policy::DisaggHighLow:
                rep.util_high = relative_utilization(
                    rep.throughput_rps, standalone_prefill_rps(cfg_.high_gpu, trace_));
                rep.util_low = relative_utilization(
                    rep.throughput_rps,
                    standalone_decode_rps(cfg_.low_gpu, cfg_.max_batched_tokens_low, trace_));
                break;
            case Policy::DisaggLowHigh:
                rep.util_low = relative_utilization(
                    rep.throughput_rps, standalone_prefill_rps(cfg_.low_gpu, trace_));
                rep.util_high = relative_utilization(
                    rep.throughput_rps,
                    standalone_decode_rps(cfg_.high_gpu, cfg_.max_batched_tokens_high, trace_));
                break;
            case Policy::Cronus:
                rep.util_high = relative_utilization(
                    rep.throughput_rps,
                    standalone_chunked_rps(cfg_.high_gpu, cfg_.max_batched_tokens_high, trace_));
                rep.util_low = relative_utilization(
                    rep.throughput_rps, standalone_prefill_rps(cfg_.low_gpu, trace_));
                break;
            default:
                break;
        }
    }
    return rep;
}

RunReport Simulation::run() {
    auto errs = validate_config(cfg_);
    if (!errs.empty()) {
        std::string joined;
        for (const auto& e : errs) joined += e + "; ";
        throw std::invalid_argument("invalid config: " + joined);
    }
    if (trace_.requests.empty()) throw std::invalid_argument("empty trace");
    build();
    while (!pq_.empty()) {
        Event e = pq_.top();
        pq_.pop();
        if (e.t + kEps < now_)
            violation("event time regression at t=" + std::to_string(e.t));
        if (e.t > now_ + kEps) idle_scan();
        now_ = std::max(now_, e.t);
        dispatch(e);
        settle();
    }
    return make_report();
}

}  // namespace

RunReport run(const ClusterConfig& cfg, const Trace& trace, const RunOptions& opts) {
    Simulation sim(cfg, trace, opts);
    return sim.run();
}

double standalone_prefill_rps(const GpuProfile& prof, const Trace& trace) {
    double total_ms = 0;
    int n = 0;
    for (const auto& q : trace.requests) {
        if (ceil_div(q.input_len, prof.kv_block_size) > prof.kv_blocks_capacity) continue;
        total_ms += prefill_time(prof, q.input_len);
        ++n;
    }
    if (n == 0 || total_ms <= 0) return 0;
    return n / (total_ms / 1000.0);
}

namespace {

// Shared loop for the standalone chunked / decode saturation runs:
// all requests queued at t=0 on one instance.
double standalone_loop(const GpuProfile& prof, int B, const Trace& trace, bool decode_only) {
    struct Ent {
        int input, output;
        long long done;
        int emitted;
        long long life;
    };
    std::deque<Ent> queue;
    for (const auto& q : trace.requests) {
        long long life = ceil_div(q.input_len + q.output_len, prof.kv_block_size);
        if (life > prof.kv_blocks_capacity) continue;
        Ent e{q.input_len, q.output_len, 0, 0, life};
        if (decode_only) {
            e.done = q.input_len;
            e.emitted = 1;  // first token free at t=0 (KV assumed present)
        }
        queue.push_back(e);
    }
    std::vector<Ent> running;
    long long reserved = 0;
    double t = 0;
    int completed = 0;
    auto admit = [&]() {
        while (!queue.empty() && static_cast<long long>(running.size()) < B &&
               reserved + queue.front().life <= prof.kv_blocks_capacity) {
            Ent e = queue.front();
            queue.pop_front();
            if (e.emitted >= e.output) {  // output_len == 1 decode entry
                ++completed;
                continue;
            }
            reserved += e.life;
            running.push_back(e);
        }
    };
    admit();
    while (!running.empty()) {
        int n_d = 0;
        long long ctxd = 0;
        Ent* head = nullptr;
        for (auto& e : running) {
            if (e.done == e.input)
                e.emitted >= 1 ? (++n_d, ctxd += e.input + e.emitted) : 0;
            else if (!head)
                head = &e;
        }
        long long chunk = 0;
        if (head) chunk = std::min<long long>(B - n_d, head->input - head->done);
        double pctx = chunk > 0 ? static_cast<double>(head->done + chunk) : 0.0;
        t += chunked_iter_time(prof, pctx, static_cast<double>(ctxd));
        if (head) head->done += chunk;
        for (auto& e : running) {
            if (e.done == e.input) {
                e.emitted++;  // finishing prefill emits the first token
            }
        }
        for (size_t i = 0; i < running.size();) {
            if (running[i].emitted >= running[i].output &&
                running[i].done == running[i].input) {
                reserved -= running[i].life;
                ++completed;
                running.erase(running.begin() + i);
            } else {
                ++i;
            }
        }
        admit();
    }
    if (completed == 0 || t <= 0) return 0;
    return completed / (t / 1000.0);
}

}  // namespace

double standalone_decode_rps(const GpuProfile& prof, int max_batched_tokens,
                             const Trace& trace) {
    return standalone_loop(prof, max_batched_tokens, trace, true);
}

double standalone_chunked_rps(const GpuProfile& prof, int max_batched_tokens,
                              const Trace& trace) {
    return standalone_loop(prof, max_batched_tokens, trace, false);
}

}  // namespace cronus
