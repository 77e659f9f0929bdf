#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "losdof.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        LosdofStatus s_ = (call);                                          \
        if (s_ != LOSDOF_STATUS_OK) {                                      \
            char msg_[256];                                                \
            losdof_last_error_message(msg_, sizeof msg_);                  \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_, msg_); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    LosdofScenario *sc = NULL;
    CHECK(losdof_scenario_new(40, 9.0, 9.0, 0.1, &sc));
    double m = 0.0, p = 0.0;
    CHECK(losdof_scenario_derived(sc, &m, &p));
    if (fabs(m - 10.0) > 1e-12) return 2;

    LosdofSpectrum *g = NULL, *ht = NULL;
    CHECK(losdof_spectrum_sample(sc, 7, LOSDOF_MATRIX_KERNEL, &g));
    CHECK(losdof_spectrum_sample(sc, 7, LOSDOF_MATRIX_PHASE_FACTORED, &ht));
    size_t len = 0;
    CHECK(losdof_spectrum_len(g, &len));
    double *a = malloc(len * sizeof *a), *b = malloc(len * sizeof *b);
    CHECK(losdof_spectrum_eigenvalues(g, a, len));
    CHECK(losdof_spectrum_eigenvalues(ht, b, len));
    for (size_t i = 0; i < len; i++) {
        if (fabs(a[i] - b[i]) > 1e-8 * a[0]) return 3;
    }
    free(a);
    free(b);

    LosdofFredholmTable *t = NULL;
    CHECK(losdof_fredholm_table_new(10.0, 0, 12, &t));
    double a1 = 0.0;
    CHECK(losdof_fredholm_trace(t, 1, &a1));
    if (fabs(a1 - 10.0) > 1e-6) return 4;
    double d = 0.0;
    if (losdof_fredholm_dk(t, 13, &d) != LOSDOF_STATUS_INDEX_OUT_OF_RANGE) return 5;
    if (losdof_last_error_length() == 0) return 6;

    LosdofScenario *bad = NULL;
    if (losdof_scenario_new(0, 1.0, 1.0, 1.0, &bad) != LOSDOF_STATUS_INVALID_PARAMETER) return 7;

    losdof_fredholm_table_free(t);
    losdof_spectrum_free(g);
    losdof_spectrum_free(ht);
    losdof_scenario_free(sc);
    printf("%s ok\n", losdof_version());
    return 0;
}
