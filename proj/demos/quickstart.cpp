// Train MH and ATRO on Gaussian clusters, then compare them under the candidate-set attack.
#include <cstdio>

#include "atro/atro.hpp"

int main() {
  using namespace atro;
  const auto train_ds = gaussian_clusters(400, 2, 2.0, 0.7, 11);
  const auto test_ds = gaussian_clusters(400, 2, 2.0, 0.7, 12);

  TrainConfig cfg;
  cfg.params.c = 0.3;
  cfg.epochs = 500;
  cfg.eta0 = 1.0;
  cfg.seed = 5;

  for (double train_eps : {0.0, 0.1}) {
    cfg.eps = train_eps;
    cfg.mode = train_eps > 0.0 ? TrainMode::atro : TrainMode::mh;
    const auto [model, trace] = train(train_ds, cfg);
    std::printf("%s (train eps %.2f): objective %.4f\n", to_string(cfg.mode), train_eps, trace.best.back());
    for (double eps : {0.0, 0.1, 0.3}) {
      const auto rep = evaluate(model, test_ds, attack_spec(AttackMethod::analytic_linear, eps), cfg.params);
      std::printf("  attack eps %.1f  err %.3f  rej %.3f  0-1-c %.3f\n", eps, rep.metrics.err, rep.metrics.rej,
                  rep.mean_loss_01c);
    }
  }
}
