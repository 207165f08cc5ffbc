#include <math.h>
#include <stdio.h>
#include "qworlds.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    QwChshReport r;
    CHECK(qw_chsh(0.7853981633974483, &r) == QW_STATUS_OK);
    CHECK(fabs(r.quantum_value - 2.0 * sqrt(2.0)) < 1e-9);
    CHECK(r.classical_bound == 2.0 && r.violated);

    QwWorld *z = NULL, *w = NULL;
    CHECK(qw_world_standard(3, &z) == QW_STATUS_OK);
    CHECK(qw_world_random(3, 11, &w) == QW_STATUS_OK);
    CHECK(qw_world_dim(w) == 3);

    double t[9];
    CHECK(qw_transition_matrix(z, w, t, 9) == QW_STATUS_OK);
    for (int n = 0; n < 3; n++) {
        double row = t[3 * n] + t[3 * n + 1] + t[3 * n + 2];
        CHECK(fabs(row - 1.0) < 1e-12);
    }
    CHECK(qw_transition_matrix(z, w, t, 4) == QW_STATUS_BUFFER_TOO_SMALL);
    CHECK(qw_last_error() != NULL);

    double tail[] = {2.0, 4.0, 6.0}, prefix[] = {100.0, -100.0}, v;
    CHECK(qw_banach_limit(prefix, 2, QW_TAIL_KIND_PERIODIC, tail, 3, &v) == QW_STATUS_OK);
    CHECK(v == 4.0);

    qw_world_free(z);
    qw_world_free(w);
    puts("ok");
    return 0;
}
