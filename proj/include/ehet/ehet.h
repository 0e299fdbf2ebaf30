/*
 * C interface to the ehet library: optimal and heuristic transmission / energy-transfer
 * policies for a pair of energy-harvesting devices.
 *
 * Every function returns an ehet_status. On failure the message is available from
 * ehet_last_error() on the calling thread until the next call on that thread.
 * Handles are opaque; release each with its *_free function. Strings returned through
 * char** outputs are owned by the caller and released with ehet_string_free.
 */
#ifndef EHET_H
#define EHET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EHET_API __declspec(dllexport)
#else
#define EHET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ehet_status {
    EHET_OK = 0,
    EHET_INVALID_ARGUMENT = 1, /* null pointer, mismatched handles, bad option value */
    EHET_DOMAIN = 2,           /* parameter outside its mathematical domain */
    EHET_PARSE = 3,            /* malformed config or trace */
    EHET_IO = 4,               /* file could not be opened or written */
    EHET_CONVERGENCE = 5,      /* iterative solver did not converge */
    EHET_INFEASIBLE = 6,       /* plan or action cannot be executed */
    EHET_CONSTRUCTION = 7,     /* auxiliary cost curve could not be built */
    EHET_INTERNAL = 8
} ehet_status;

typedef struct ehet_scenario ehet_scenario;
typedef struct ehet_policy ehet_policy;
typedef struct ehet_plan ehet_plan;
typedef struct ehet_sim ehet_sim;

typedef enum ehet_device { EHET_TX = 0, EHET_RC = 1 } ehet_device;

typedef enum ehet_heuristic {
    EHET_GREEDY = 0,
    EHET_BALANCED = 1,
    EHET_LOW_COMPLEXITY = 2,
    EHET_COROLLARY = 3
} ehet_heuristic;

typedef struct ehet_bounds_result {
    double rho_max;
    double no_et;   /* long-term reward bound without transfer */
    double et;      /* bound with transfer */
    double xi_star; /* share of the receiver harvest kept by the receiver */
    double c_tx;    /* balanced energy per slot at the transmitter */
    double c_rc;    /* and at the receiver */
    int tx_has_chord;
    double tx_chord_x; /* tangent energy of the first transmitter chord */
    double tx_chord_m; /* reward slope along that chord */
} ehet_bounds_result;

typedef struct ehet_sim_summary {
    double reward;
    long slots;
    long outage_slots;
    long outage_tx, outage_rc;
    long overflow_tx, overflow_rc;
} ehet_sim_summary;

typedef struct ehet_slot {
    long e_tx, e_rc;
    double rho;
    long d;
    long b_tx, b_rc;
} ehet_slot;

typedef struct ehet_plan_summary {
    int horizon;
    double objective;   /* (1/K) sum g(P_k) of the continuous plan */
    double residual;    /* largest battery violation in the continuous replay */
    double upper_bound; /* no plan on these traces earns more per slot */
    double duality_gap; /* barrier gap of the relaxed program, summed over slots */
    int certified;      /* objective within 1e-6 relative of upper_bound */
    int convexified;    /* reward curve replaced by its concave envelope */
    int newton_steps;
} ehet_plan_summary;

EHET_API const char* ehet_last_error(void);
EHET_API const char* ehet_version(void);
EHET_API void ehet_string_free(char* s);

/* Scenarios */
EHET_API ehet_status ehet_scenario_from_json(const char* text, const char* base_dir, ehet_scenario** out);
EHET_API ehet_status ehet_scenario_from_file(const char* path, ehet_scenario** out);
EHET_API void ehet_scenario_free(ehet_scenario* s);
EHET_API ehet_status ehet_scenario_to_json(const ehet_scenario* s, char** out);
EHET_API ehet_status ehet_scenario_set_beta(ehet_scenario* s, double beta);
EHET_API ehet_status ehet_scenario_set_lambda(ehet_scenario* s, double lambda);
EHET_API ehet_status ehet_scenario_set_battery(ehet_scenario* s, ehet_device dev, long quanta);
EHET_API ehet_status ehet_scenario_set_horizon(ehet_scenario* s, long slots);
EHET_API ehet_status ehet_scenario_set_seed(ehet_scenario* s, uint64_t seed);
EHET_API ehet_status ehet_scenario_set_transfer(ehet_scenario* s, int enabled);
EHET_API ehet_status ehet_scenario_get_horizon(const ehet_scenario* s, long* out);
EHET_API ehet_status ehet_scenario_get_transfer(const ehet_scenario* s, int* out);
/* Mean harvested quanta per slot and the Joule size of one quantum (0 when not calibrated). */
EHET_API ehet_status ehet_scenario_arrival_mean(const ehet_scenario* s, ehet_device dev, double* out);
EHET_API ehet_status ehet_scenario_quantum_joule(const ehet_scenario* s, double* out);

/* Bounds */
EHET_API ehet_status ehet_bounds(const ehet_scenario* s, ehet_bounds_result* out);
/* Bounds with the long-term means replaced by the averages of the scenario traces. */
EHET_API ehet_status ehet_bounds_finite(const ehet_scenario* s, ehet_bounds_result* out);

/* Online policies over the battery grid */
EHET_API ehet_status ehet_solve_online(const ehet_scenario* s, ehet_policy** out);
EHET_API ehet_status ehet_heuristic_policy(const ehet_scenario* s, ehet_heuristic kind, ehet_policy** out);
EHET_API void ehet_policy_free(ehet_policy* p);
/* Exact long-run average reward of the policy under the scenario's arrival laws. */
EHET_API ehet_status ehet_policy_evaluate(const ehet_policy* p, const ehet_scenario* s, double* gain);
EHET_API ehet_status ehet_policy_iterations(const ehet_policy* p, int* out);
EHET_API ehet_status ehet_policy_action(const ehet_policy* p, long e_tx, long e_rc, double* rho, long* d);
EHET_API ehet_status ehet_policy_name(const ehet_policy* p, char** out);
EHET_API ehet_status ehet_policy_to_json(const ehet_policy* p, char** out);

/* Offline plans on the scenario traces */
EHET_API ehet_status ehet_solve_offline(const ehet_scenario* s, ehet_plan** out);
EHET_API void ehet_plan_free(ehet_plan* p);
EHET_API ehet_status ehet_plan_summary_get(const ehet_plan* p, ehet_plan_summary* out);
EHET_API ehet_status ehet_plan_step(const ehet_plan* p, int slot, double* power, double* transfer);
EHET_API ehet_status ehet_plan_write(const ehet_plan* p, const char* path);

/* Simulation on the scenario traces */
EHET_API ehet_status ehet_simulate_policy(const ehet_scenario* s, const ehet_policy* p, ehet_sim** out);
/* Quantized replay of a plan; actions the batteries cannot afford are cut down. */
EHET_API ehet_status ehet_simulate_plan(const ehet_scenario* s, const ehet_plan* p, ehet_sim** out);
EHET_API void ehet_sim_free(ehet_sim* sim);
EHET_API ehet_status ehet_sim_summary_get(const ehet_sim* sim, ehet_sim_summary* out);
EHET_API ehet_status ehet_sim_slot(const ehet_sim* sim, long index, ehet_slot* out);
/* CSV with header slot,e_tx,e_rc,rho,d,b_tx,b_rc. */
EHET_API ehet_status ehet_sim_write_csv(const ehet_sim* sim, const char* path);

#ifdef __cplusplus
}
#endif

#endif
