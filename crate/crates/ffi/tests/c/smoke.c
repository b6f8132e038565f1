#include <math.h>
#include <stdio.h>
#include "monoplane.h"

#define CHECK(cond)                                              \
    do {                                                         \
        if (!(cond)) {                                           \
            fprintf(stderr, "check failed line %d\n", __LINE__); \
            return 1;                                            \
        }                                                        \
    } while (0)

int main(void) {
    MpField *f = NULL;
    CHECK(mp_field_new("p_laplacian(p=4)", &f) == MP_STATUS_OK);
    double gx, gy;
    CHECK(mp_field_eval(f, 0.5, 0.0, &gx, &gy) == MP_STATUS_OK);
    CHECK(fabs(gx - 0.125) < 1e-15 && gy == 0.0);

    MpField *bad = NULL;
    CHECK(mp_field_new("p_laplacian", &bad) == MP_STATUS_PARSE);
    CHECK(bad == NULL);
    char msg[256];
    size_t n = mp_last_error_message(msg, sizeof msg);
    CHECK(n > 1 && n <= sizeof msg);

    MpSolution *sol = NULL;
    double cosc[1] = {1.0};
    CHECK(mp_solve(f, 0.25, 0.0, cosc, 1, NULL, 0, 1e-10, &sol) == MP_STATUS_OK);
    size_t nodes = 0;
    CHECK(mp_solution_node_count(sol, &nodes) == MP_STATUS_OK && nodes > 0);
    double residual, lip;
    size_t iters;
    CHECK(mp_solution_report(sol, &residual, &iters, &lip) == MP_STATUS_OK);
    CHECK(residual < 1e-10);

    mp_solution_free(sol);
    mp_field_free(f);
    printf("ok\n");
    return 0;
}
