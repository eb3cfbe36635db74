#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mstd/convergence.hpp"
#include "mstd/envs.hpp"
#include "mstd/harness.hpp"
#include "mstd/qtable.hpp"
#include "mstd/rng.hpp"
#include "mstd/td_targets.hpp"

namespace py = pybind11;
using namespace mstd;

namespace {

std::vector<QEval> to_qevals(const std::vector<double>& values) {
  std::vector<QEval> evals;
  evals.reserve(values.size());
  for (double v : values) evals.push_back({v, std::nullopt});
  return evals;
}

std::vector<std::uint8_t> to_flags(const std::vector<int>& flags) {
  return {flags.begin(), flags.end()};
}

}  // namespace

PYBIND11_MODULE(_mstd, m) {
  m.doc() =
      "Multi-state TD targets, exact finite-MDP operators and the experiment "
      "harness. Invalid arguments raise ValueError, config and runtime "
      "problems raise RuntimeError.";
  m.attr("__version__") = "0.1.0";

  py::class_<FiniteMdp>(m, "FiniteMdp")
      .def_readonly("num_states", &FiniteMdp::num_states)
      .def_readonly("num_actions", &FiniteMdp::num_actions)
      .def_readonly("discount", &FiniteMdp::discount)
      .def_readonly("terminal_states", &FiniteMdp::terminal_states)
      .def("__repr__", [](const FiniteMdp& mdp) {
        return "FiniteMdp(num_states=" + std::to_string(mdp.num_states) +
               ", num_actions=" + std::to_string(mdp.num_actions) +
               ", discount=" + std::to_string(mdp.discount) + ")";
      });

  m.def(
      "make_chain",
      [](int length, double slip_prob, double right_reward, double step_reward,
         double discount) {
        ChainSpec spec;
        spec.length = length;
        spec.slip_prob = slip_prob;
        spec.right_reward = right_reward;
        spec.step_reward = step_reward;
        spec.discount = discount;
        return make_chain(spec);
      },
      py::arg("length") = 5, py::arg("slip_prob") = 0.0,
      py::arg("right_reward") = 1.0, py::arg("step_reward") = 0.0,
      py::arg("discount") = 0.9,
      "Slippery chain MDP; entering the rightmost state pays and terminates.");

  m.def("load_mdp", &load_mdp, py::arg("path"),
        "Reads the text MDP format used by the convergence laboratory.");

  m.def(
      "single_step_target",
      [](double reward, double q_next, double discount, bool terminal) {
        return single_step_target(reward, QEval{q_next, std::nullopt},
                                  discount, terminal);
      },
      py::arg("reward"), py::arg("q_next"), py::arg("discount"),
      py::arg("terminal") = false);

  m.def(
      "multi_step_target",
      [](const std::vector<double>& rewards, const std::vector<int>& pad_flags,
         double q_horizon, double discount, bool terminal_flag) {
        return multi_step_target(rewards, to_flags(pad_flags),
                                 QEval{q_horizon, std::nullopt}, discount,
                                 terminal_flag);
      },
      py::arg("rewards"), py::arg("pad_flags"), py::arg("q_horizon"),
      py::arg("discount"), py::arg("terminal_flag") = false,
      "Truncated L-step target; padded rewards drop out, terminal_flag cuts "
      "the bootstrap.");

  m.def(
      "mstd_target",
      [](const std::vector<double>& rewards, const std::vector<int>& pad_flags,
         const std::vector<double>& q_values, double discount,
         bool terminal_flag) {
        return mstd_target(rewards, to_flags(pad_flags), to_qevals(q_values),
                           discount, terminal_flag);
      },
      py::arg("rewards"), py::arg("pad_flags"), py::arg("q_values"),
      py::arg("discount"), py::arg("terminal_flag") = false,
      "Arithmetic mean of the horizon-1..L targets; q_values[l-1] is the "
      "bootstrap at horizon l.");

  m.def(
      "fixed_point_q",
      [](const FiniteMdp& mdp, int window, double tol, int max_iter) {
        BehaviorPolicy beta =
            BehaviorPolicy::uniform(mdp.num_states, mdp.num_actions);
        auto op = [&](const QTable& q) {
          return apply_h_bar(q, mdp, window, beta);
        };
        FixedPointResult result = fixed_point(
            op, QTable(mdp.num_states, mdp.num_actions), tol, max_iter);
        py::dict out;
        out["q"] = result.q_f.values;
        out["iterations"] = result.iterations;
        out["final_residual"] = result.final_residual;
        return out;
      },
      py::arg("mdp"), py::arg("window") = 1, py::arg("tol") = 1e-10,
      py::arg("max_iter") = 1000000,
      "Q^f of the horizon-averaged operator under the uniform behavior "
      "policy; Q values are returned state-major.");

  m.def(
      "value_iteration_q",
      [](const FiniteMdp& mdp, double tol) {
        return value_iteration(mdp, tol).values;
      },
      py::arg("mdp"), py::arg("tol") = 1e-10,
      "Classical Bellman-optimality iteration, state-major Q values.");

  m.def(
      "contraction_ratio",
      [](const FiniteMdp& mdp, int l, int trials, std::uint64_t seed) {
        BehaviorPolicy beta =
            BehaviorPolicy::uniform(mdp.num_states, mdp.num_actions);
        std::mt19937_64 gen(derive_seed(seed, "contraction"));
        return contraction_test(mdp, l, beta, trials, gen);
      },
      py::arg("mdp"), py::arg("l"), py::arg("trials") = 50,
      py::arg("seed") = 1,
      "Worst observed ||H^l q1 - H^l q2|| / ||q1 - q2|| over random q-pairs; "
      "bounded by discount^l.");

  m.def(
      "tabular_convergence",
      [](const FiniteMdp& mdp, int window, std::uint64_t updates,
         double alpha0, double t0, double kappa, std::uint64_t seed) {
        BehaviorPolicy beta =
            BehaviorPolicy::uniform(mdp.num_states, mdp.num_actions);
        LrSchedule schedule{alpha0, t0, kappa};
        ConvergenceRunOptions opts;
        opts.window = window;
        opts.updates = updates;
        opts.record_every = std::max<std::uint64_t>(1, updates / 20);
        opts.seed = seed;
        ConvergenceTrace trace =
            run_tabular_convergence(mdp, beta, schedule, opts);
        py::dict out;
        out["final_residual"] = trace.final_residual;
        out["residuals"] = trace.residuals;
        out["q_final"] = trace.q_final.values;
        out["q_fixed"] = trace.q_fixed.values;
        return out;
      },
      py::arg("mdp"), py::arg("window") = 1, py::arg("updates") = 100000,
      py::arg("alpha0") = 0.5, py::arg("t0") = 2000.0, py::arg("kappa") = 0.7,
      py::arg("seed") = 1,
      "Windowed tabular Q-learning under the uniform behavior policy; "
      "residuals are ||Q_t - Q^f||_inf samples.");

  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& options) {
        ExperimentConfig config = parse_config(std::nullopt, options);
        ExperimentResult result = run_experiment(config);
        py::dict out;
        out["mean"] = result.summary.mean;
        out["std"] = result.summary.std;
        out["n"] = result.summary.n;
        out["formatted"] = format_mean_std(result.summary);
        out["summary_path"] = result.summary_path;
        py::list per_seed;
        for (const SeedOutcome& o : result.outcomes) {
          py::dict row;
          row["seed"] = o.seed;
          row["failed"] = o.failed;
          if (o.failed) {
            row["error"] = o.error;
          } else {
            row["final_return"] = o.final_return;
            row["eval_csv"] = o.eval_csv;
            row["train_csv"] = o.train_csv;
          }
          per_seed.append(row);
        }
        out["per_seed"] = per_seed;
        return out;
      },
      py::arg("options"),
      "Runs every seed of one configuration. options is a dict of the same "
      "string keys the config file understands (env, algo, mode, L, steps, "
      "seeds, out, ...).");

  m.def("emit_learning_curve", &emit_learning_curve, py::arg("csv_paths"),
        py::arg("out_path"),
        "Renders evaluation CSVs as one SVG with per-seed traces, a mean "
        "line and a std band.");
}
