// Two-head network on two moons: adversarially trained against PGD vs trained on clean inputs only.
#include <cstdio>

#include "atro/atro.hpp"

int main() {
  using namespace atro;
  const auto train_ds = two_moons(400, 0.1, 1);
  const auto test_ds = two_moons(400, 0.1, 2);

  NeuralTrainConfig cfg;
  cfg.params.c = 0.3;
  cfg.hidden = {16, 16};
  cfg.epochs = 100;
  cfg.attack = attack_spec(AttackMethod::pgd, 0.1);
  cfg.attack.steps = 5;

  auto attack = attack_spec(AttackMethod::pgd, 0.1);
  for (double train_eps : {0.0, 0.1}) {
    cfg.attack.eps = train_eps;
    const auto net = train_neural(train_ds, cfg).first;
    const auto rep = evaluate(net, test_ds, attack, cfg.params);
    std::printf("train eps %.1f: under PGD eps 0.1  err %.3f  rej %.3f  0-1-c %.3f (clean %.3f)\n", train_eps,
                rep.metrics.err, rep.metrics.rej, rep.mean_loss_01c, rep.mean_loss_01c_clean);
  }
}
