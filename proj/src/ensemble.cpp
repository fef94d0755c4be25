// ensemble.cpp: Concurrent trajectory ensembles with an index-ordered reduction

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <variant>

#include "skinsim/engine.hpp"

namespace skinsim {

namespace {

// Welford accumulator over a (times x components) grid.
struct GridAccumulator {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd m2;

    void add(Eigen::Index row, Eigen::Index col, double x, int n) {
        const double delta = x - mean(row, col);
        mean(row, col) += delta / n;
        m2(row, col) += delta * (x - mean(row, col));
    }

    SeriesStat finish(int n) const {
        SeriesStat s;
        s.mean = mean;
        s.se = Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
        if (n > 1) s.se = (m2.array() / (static_cast<double>(n - 1) * n)).max(0.0).sqrt().matrix();
        return s;
    }
};

struct Field {
    std::string name;
    std::function<std::size_t(const TrajectoryRecord&)> width;
    std::function<double(const TrajectoryRecord&, std::size_t)> value;
};

std::vector<Field> fields_for(const ObservableSet& obs) {
    std::vector<Field> f;
    auto scalar = [](double TrajectoryRecord::*member) {
        return [member](const TrajectoryRecord& r, std::size_t) { return r.*member; };
    };
    auto one = [](const TrajectoryRecord&) -> std::size_t { return 1; };
    auto vec = [](std::vector<double> TrajectoryRecord::*member) {
        return std::pair{[member](const TrajectoryRecord& r) { return (r.*member).size(); },
                         [member](const TrajectoryRecord& r, std::size_t k) { return (r.*member)[k]; }};
    };
    if (obs.entropy) f.push_back({"S_half", one, scalar(&TrajectoryRecord::S_half)});
    if (obs.f_skin) f.push_back({"f_skin", one, scalar(&TrajectoryRecord::f_skin)});
    if (obs.f_r) f.push_back({"f_r", one, scalar(&TrajectoryRecord::f_r)});
    if (obs.velocity) f.push_back({"velocity", one, scalar(&TrajectoryRecord::velocity)});
    if (obs.mutual_information) f.push_back({"I_AB", one, scalar(&TrajectoryRecord::mutual_information)});
    f.push_back({"jumps", one, [](const TrajectoryRecord& r, std::size_t) { return static_cast<double>(r.jump_count); }});
    if (obs.density) {
        auto [w, v] = vec(&TrajectoryRecord::density);
        f.push_back({"density", w, v});
    }
    if (obs.correlation) {
        auto [w, v] = vec(&TrajectoryRecord::correlation);
        f.push_back({"correlation", w, v});
    }
    if (obs.momentum) {
        auto [w, v] = vec(&TrajectoryRecord::momentum);
        f.push_back({"momentum", w, v});
    }
    return f;
}

using Outcome = std::variant<std::vector<TrajectoryRecord>, EnsembleError::Failure>;

} // namespace

const SeriesStat* EnsembleSeries::find(std::string_view name) const {
    for (const auto& [key, stat] : observables)
        if (key == name) return &stat;
    return nullptr;
}

const SeriesStat& EnsembleSeries::at(std::string_view name) const {
    if (const auto* s = find(name)) return *s;
    throw std::out_of_range("EnsembleSeries: observable '" + std::string(name) + "' was not recorded");
}

EnsembleError::EnsembleError(std::vector<Failure> failures)
    : std::runtime_error([&] {
          std::string msg = std::to_string(failures.size()) + " trajectory failure(s)";
          if (!failures.empty()) {
              const auto& f = failures.front();
              msg += "; first: trajectory " + std::to_string(f.trajectory) + ", t = " + std::to_string(f.time) + ": " +
                     f.message;
          }
          return msg;
      }()),
      failures_(std::move(failures)) {}

EnsembleSeries run_ensemble(const ModelSpec& spec, const EngineConfig& config, InitialKind initial, int n_traj,
                            int workers, const ProgressFn& progress) {
    validate(config, spec);
    if (n_traj < 1) throw std::invalid_argument("n_traj: must be >= 1");
    workers = std::clamp(workers, 1, n_traj);

    const bool per_trajectory_model = spec.disorder == Disorder::uniform;
    std::optional<Propagation> shared;
    if (!per_trajectory_model) shared = prepare_propagation(spec, config.dt);

    const auto fields = fields_for(config.observables);
    std::vector<GridAccumulator> acc(fields.size());
    std::vector<double> times;
    std::vector<EnsembleError::Failure> failures;
    int reduced = 0;

    std::vector<std::optional<Outcome>> slots(static_cast<std::size_t>(n_traj));
    std::size_t cursor = 0;
    std::mutex mutex;
    std::atomic<int> next{0};

    auto reduce = [&](const Outcome& outcome) {
        if (const auto* failure = std::get_if<EnsembleError::Failure>(&outcome)) {
            failures.push_back(*failure);
            return;
        }
        const auto& records = std::get<std::vector<TrajectoryRecord>>(outcome);
        if (times.empty()) {
            for (const auto& r : records) times.push_back(r.t);
            for (std::size_t f = 0; f < fields.size(); ++f) {
                const auto width = static_cast<Eigen::Index>(fields[f].width(records.front()));
                acc[f].mean = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(records.size()), width);
                acc[f].m2 = acc[f].mean;
            }
        }
        ++reduced;
        for (std::size_t f = 0; f < fields.size(); ++f)
            for (std::size_t row = 0; row < records.size(); ++row)
                for (Eigen::Index col = 0; col < acc[f].mean.cols(); ++col)
                    acc[f].add(static_cast<Eigen::Index>(row), col,
                               fields[f].value(records[row], static_cast<std::size_t>(col)), reduced);
    };

    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_traj) return;
            const auto index = static_cast<std::uint64_t>(i);
            Outcome outcome;
            try {
                std::optional<Propagation> own;
                if (per_trajectory_model) own = prepare_propagation(for_trajectory(spec, index), config.dt);
                const Propagation& prop = own ? *own : *shared;
                const SlaterState psi0 = make_initial(initial, prop.spec, config.seed, index);
                outcome = run_trajectory(prop, config, psi0, index);
            } catch (const StepError& e) {
                outcome = EnsembleError::Failure{e.trajectory(), e.time(), e.what()};
            } catch (const std::exception& e) {
                outcome = EnsembleError::Failure{index, 0.0, e.what()};
            }
            std::lock_guard lock(mutex);
            slots[static_cast<std::size_t>(i)] = std::move(outcome);
            while (cursor < slots.size() && slots[cursor]) {
                reduce(*slots[cursor]);
                slots[cursor].reset();
                ++cursor;
            }
            if (progress) progress(static_cast<int>(cursor), n_traj);
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    if (!failures.empty()) throw EnsembleError(std::move(failures));

    EnsembleSeries out;
    out.L = spec.L;
    out.n_trajectories = n_traj;
    out.times = std::move(times);
    for (std::size_t f = 0; f < fields.size(); ++f) out.observables.emplace_back(fields[f].name, acc[f].finish(n_traj));
    return out;
}

EnsembleSeries trajectory_series(const std::vector<TrajectoryRecord>& records, const ObservableSet& observables, int L) {
    if (records.empty()) throw std::invalid_argument("trajectory_series: no records");
    EnsembleSeries out;
    out.L = L;
    out.n_trajectories = 1;
    for (const auto& r : records) out.times.push_back(r.t);
    for (const auto& field : fields_for(observables)) {
        const auto width = static_cast<Eigen::Index>(field.width(records.front()));
        SeriesStat s;
        s.mean.resize(static_cast<Eigen::Index>(records.size()), width);
        for (std::size_t row = 0; row < records.size(); ++row)
            for (Eigen::Index col = 0; col < width; ++col)
                s.mean(static_cast<Eigen::Index>(row), col) = field.value(records[row], static_cast<std::size_t>(col));
        s.se = Eigen::MatrixXd::Zero(s.mean.rows(), width);
        out.observables.emplace_back(field.name, std::move(s));
    }
    return out;
}

} // namespace skinsim
