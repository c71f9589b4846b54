"""Writes the Gompertz stand-in mortality table used when no real table is given.

mu(t) = B * c**t for t years past age 70; one-year death rates are exact
integrals of that force, and nobody survives past age 110. B and c were fitted
so that the transformed stop times 0.4825 (200 equal members) and 0.784
(800 equal members) map to 15.41 and 21.70 years.
"""
import math
import sys

B = 0.014857902951488663
C = 1.1265344257449514
BASE_AGE = 70
LIMITING_AGE = 110


def survival(t):
    return math.exp(-B / math.log(C) * (C ** t - 1.0))


def main(path):
    with open(path, "w", newline="\n") as out:
        out.write("age,qx\n")
        for age in range(BASE_AGE, LIMITING_AGE):
            t = age - BASE_AGE
            qx = 1.0 if age == LIMITING_AGE - 1 else 1.0 - survival(t + 1) / survival(t)
            out.write(f"{age},{qx:.17g}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "gompertz_stand_in_70.csv")
