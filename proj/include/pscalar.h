/* Copyright 2026 The pscalar Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the pscalar library.
 *
 * Every function returns a psc_status. On failure, psc_last_error() describes
 * the most recent error on the calling thread. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * psc_string_free(). Handles are released with their *_free / *_destroy
 * function; passing NULL to those is a no-op.
 */

#ifndef PSCALAR_H_
#define PSCALAR_H_

#include <stdint.h>

#if defined(PSC_BUILDING_LIBRARY)
#define PSC_API __attribute__((visibility("default")))
#else
#define PSC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  PSC_OK = 0,
  PSC_INVALID_ARGUMENT = 1,
  PSC_NOT_FOUND = 2,
  PSC_FAILED_PRECONDITION = 3,
  PSC_RESOURCE_EXHAUSTED = 4,
  PSC_UNAVAILABLE = 5,
  PSC_PERMISSION_DENIED = 6,
  PSC_UNAUTHENTICATED = 7,
  PSC_INTERNAL = 8
} psc_status;

typedef struct psc_scalar psc_scalar;
typedef struct psc_node psc_node;
typedef struct psc_runner psc_runner;

PSC_API const char* psc_version(void);
PSC_API const char* psc_last_error(void);
PSC_API void psc_string_free(char* s);

/* Scalars, evaluated locally. For data owners and tests. */
PSC_API psc_status psc_scalar_private(const char* entity, const char* attribute,
                                      double value, double floor,
                                      double ceiling, psc_scalar** out);
PSC_API psc_status psc_scalar_constant(double c, psc_scalar** out);
/* kind: "add", "sub" or "mul". */
PSC_API psc_status psc_scalar_binary(const char* kind, const psc_scalar* a,
                                     const psc_scalar* b, psc_scalar** out);
/* kind: "neg", "scale" (by c), "shift" (by c) or "pow" (to k). */
PSC_API psc_status psc_scalar_unary(const char* kind, const psc_scalar* a,
                                    double c, int k, psc_scalar** out);
/* JSON: degree, terms, entities, poly. */
PSC_API psc_status psc_scalar_describe(const psc_scalar* a, char** json);
/* JSON array of per-variable spends at sigma. */
PSC_API psc_status psc_scalar_spends(const psc_scalar* a, double sigma,
                                     char** json);
PSC_API void psc_scalar_free(psc_scalar* a);

PSC_API psc_status psc_rdp_to_dp(double rho, double delta, double* eps);

/* Users file: one "name<TAB>key" line per user. Appends a new user with a
 * fresh key and returns the key. Fails if the name exists. */
PSC_API psc_status psc_users_add(const char* path, const char* name,
                                 char** key);

/* options_json keys: "eps" (required), "delta", "shared_ledger", "journal",
 * "audit", "seed", "check_confinement". */
PSC_API psc_status psc_node_create(const char* options_json, psc_node** out);
/* spec: "path.csv" or "path.csv#col=lo..hi,...". */
PSC_API psc_status psc_node_ingest_csv(psc_node* node, const char* spec);
PSC_API psc_status psc_node_add_user(psc_node* node, const char* name,
                                     const char* key);
PSC_API psc_status psc_node_load_users(psc_node* node, const char* path);
/* Starts serving on host:port (port 0 picks one) and returns the bound port. */
PSC_API psc_status psc_node_listen(psc_node* node, const char* host, int port,
                                   int* bound_port);
/* Blocks until psc_node_stop is called from another thread. */
PSC_API psc_status psc_node_wait(psc_node* node);
PSC_API psc_status psc_node_stop(psc_node* node);
/* Audit events as JSON lines. */
PSC_API psc_status psc_node_audit(const psc_node* node, char** jsonl);
/* "ledger<TAB>entity<TAB>rho" lines. */
PSC_API psc_status psc_node_ledgers(const psc_node* node, char** text);
PSC_API void psc_node_destroy(psc_node* node);

/* Reads an audit log file, checking that every line is a JSON object. */
PSC_API psc_status psc_audit_read(const char* path, char** jsonl);

/* Scenario runner. options_json keys: "host", "port", "key", "keys"
 * (object from session label to key). */
PSC_API psc_status psc_runner_create(const char* options_json,
                                     psc_runner** out);
/* Runs one REPL command; *report is a JSON step report, or NULL for blank
 * input. A failing step is reported, not returned as an error. */
PSC_API psc_status psc_runner_exec_line(psc_runner* runner, const char* line,
                                        char** report);
/* Runs one JSON step. */
PSC_API psc_status psc_runner_exec_step(psc_runner* runner,
                                        const char* step_json, char** report);
/* JSON view of everything the runner holds. */
PSC_API psc_status psc_runner_snapshot(const psc_runner* runner, char** json);
PSC_API void psc_runner_destroy(psc_runner* runner);

/* Runs a script file. *report holds JSON lines; *passed is 1 iff every step
 * passed. */
PSC_API psc_status psc_run_script(const char* path, const char* options_json,
                                  char** report, int* passed);

#ifdef __cplusplus
}
#endif

#endif /* PSCALAR_H_ */
