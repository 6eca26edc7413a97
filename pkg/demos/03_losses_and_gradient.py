"""One frozen adaptation step, inspected term by term.

Builds a random step context, prints the three loss terms against their
entropy bounds, verifies the analytic gradient against finite differences,
and takes a single AdamW step to show the loss actually drops.
"""

import numpy as np

from d2tpt import AdamWState, OptimHypers, adamw_step, frozen_loss, grad_total
from d2tpt.gradcheck import finite_difference_grad, random_instance, relative_error


def main():
    rng = np.random.default_rng(12)
    prompts, frozen = random_instance(rng, lam=1.0)

    print("== loss breakdown at the frozen point ==")
    lb = frozen_loss(prompts, frozen)
    bound = np.log(frozen.protos.shape[0])
    print(f"selected views: {int(frozen.mask.sum())}/{frozen.mask.size}")
    print(f"l_ram  {lb.l_ram:.6f}   (entropy bound ln C = {bound:.6f})")
    print(f"l_en   {lb.l_en:.6f}")
    print(f"l_md   {lb.l_md:.6f}")
    print(f"total  {lb.total:.6f} = l_ram + {lb.alpha} * l_en + {lb.beta} * l_md")

    print("\n== analytic gradient vs central differences ==")
    grads = grad_total(prompts, frozen)
    fd = finite_difference_grad(prompts, frozen)
    rel_t = np.linalg.norm(grads.g_t - fd.g_t) / np.linalg.norm(fd.g_t)
    rel_v = np.linalg.norm(grads.g_v - fd.g_v) / np.linalg.norm(fd.g_v)
    print(f"text prompt grad   relative error {rel_t:.3e}")
    print(f"visual prompt grad relative error {rel_v:.3e}")
    print(f"joint relative error {relative_error(grads, fd):.3e}")

    print("\n== one optimizer step on this sample ==")
    hypers = OptimHypers(lr=5e-3)
    stepped, state = adamw_step(prompts, grads, AdamWState.zeros(prompts.p_t.size),
                                hypers)
    after = frozen_loss(stepped, frozen)
    print(f"step size |dp_t| = {np.linalg.norm(stepped.p_t - prompts.p_t):.3e}, "
          f"|dp_v| = {np.linalg.norm(stepped.p_v - prompts.p_v):.3e}")
    print(f"total loss {lb.total:.6f} -> {after.total:.6f} "
          f"(reduced: {after.total < lb.total})")
    print("the mask and retrieval residual stay frozen during the step, so the")
    print("drop is attributable to the prompts alone.")


if __name__ == "__main__":
    main()
