/* Round trip through the C interface: configure a Monte Carlo batch,
 * run it, and compare against the exact recursion and the analytic
 * asymptote.
 *
 * Build (from the repository root, after `cargo build --release`):
 *
 *   cc crates/dfa-ffi/examples/demo.c \
 *      -Icrates/dfa-ffi/include \
 *      target/release/libdfa_ffi.a \
 *      -lpthread -lm -o demo && ./demo
 */

#include <stdio.h>
#include <stdlib.h>

#include "dfa.h"

static void fail(const char *where)
{
    char message[256];
    dfa_last_error_message(message, sizeof message);
    fprintf(stderr, "%s failed: %s\n", where, message);
    exit(1);
}

int main(void)
{
    printf("library version %s\n", dfa_version());

    /* Exact expected slots for a tiny population. */
    double exact = 0.0;
    if (dfa_exact_expected_slots(8, "schoute", 8, &exact) != DFA_STATUS_OK)
        fail("dfa_exact_expected_slots");
    printf("exact  : 8 stations from an 8-slot frame take %.6f slots\n", exact);

    /* The same setting simulated. */
    DfaSimulation *sim = dfa_simulation_new();
    if (!sim)
        fail("dfa_simulation_new");
    if (dfa_simulation_set_population(sim, 8) != DFA_STATUS_OK ||
        dfa_simulation_set_estimator(sim, "schoute") != DFA_STATUS_OK ||
        dfa_simulation_set_initial_frame(sim, 8) != DFA_STATUS_OK ||
        dfa_simulation_set_seed(sim, 1) != DFA_STATUS_OK ||
        dfa_simulation_set_runs(sim, 20000) != DFA_STATUS_OK)
        fail("configuring the simulation");

    DfaBatchSummary batch;
    if (dfa_simulation_run_batch(sim, &batch) != DFA_STATUS_OK)
        fail("dfa_simulation_run_batch");
    printf("sim    : mean %.6f slots (+/- %.6f), %llu runs\n",
           batch.mean_slots,
           batch.slots_ci_half_width,
           (unsigned long long)batch.completed_runs);

    /* A big population with the optimized two-phase estimator. */
    if (dfa_simulation_set_population(sim, 10000) != DFA_STATUS_OK ||
        dfa_simulation_set_estimator(sim, "ae2_opt") != DFA_STATUS_OK ||
        dfa_simulation_set_initial_frame(sim, 1) != DFA_STATUS_OK ||
        dfa_simulation_set_runs(sim, 200) != DFA_STATUS_OK)
        fail("reconfiguring the simulation");
    if (dfa_simulation_run_batch(sim, &batch) != DFA_STATUS_OK)
        fail("dfa_simulation_run_batch (ae2_opt)");
    printf("ae2_opt: efficiency %.4f at N=10000\n", batch.mean_efficiency);
    dfa_simulation_free(sim);

    /* Analytic reference: the full-frame asymptote. */
    double eta = 0.0;
    if (dfa_phase_efficiency(40.0, &eta) != DFA_STATUS_OK)
        fail("dfa_phase_efficiency");
    printf("asymptote of the full-frame policy: %.5f\n", eta);

    return 0;
}
