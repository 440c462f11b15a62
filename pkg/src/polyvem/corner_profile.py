"""Angular profile of the clamped-plate corner singularity on a 7*pi/4 corner.

Transcribed from the classical singular-function tables for the biharmonic
operator with clamped boundary conditions (Grisvard).  For the corner opening
omega and a root z of sin^2(z*omega) = z^2 sin^2(omega), the function

    g(theta) = [sin((z-1)w)/(z-1) - sin((z+1)w)/(z+1)]
                 * [cos((z-1)theta) - cos((z+1)theta)]
             - [cos((z-1)w) - cos((z+1)w)]
                 * [sin((z-1)theta)/(z-1) - sin((z+1)theta)/(z+1)]

solves the angular ODE g'''' + ((z+1)^2 + (z-1)^2) g'' + (z+1)^2 (z-1)^2 g = 0
with g(0) = g'(0) = g(omega) = g'(omega) = 0, so r^(1+z) g(theta) is
biharmonic with vanishing clamped data on the two corner edges.
"""

import numpy as np

OMEGA = 7.0 * np.pi / 4.0
Z_ROOT = 0.505009698896589


class CornerProfile:
    """g(theta) and its first three derivatives for a given exponent/opening."""

    def __init__(self, z=Z_ROOT, omega=OMEGA):
        self.z = z
        self.omega = omega
        self.a_minus = z - 1.0
        self.a_plus = z + 1.0
        self.c1 = np.sin(self.a_minus * omega) / self.a_minus \
            - np.sin(self.a_plus * omega) / self.a_plus
        self.c2 = np.cos(self.a_minus * omega) - np.cos(self.a_plus * omega)

    def value(self, theta):
        am, ap = self.a_minus, self.a_plus
        return self.c1 * (np.cos(am * theta) - np.cos(ap * theta)) \
            - self.c2 * (np.sin(am * theta) / am - np.sin(ap * theta) / ap)

    def d1(self, theta):
        am, ap = self.a_minus, self.a_plus
        return self.c1 * (-am * np.sin(am * theta) + ap * np.sin(ap * theta)) \
            - self.c2 * (np.cos(am * theta) - np.cos(ap * theta))

    def d2(self, theta):
        am, ap = self.a_minus, self.a_plus
        return self.c1 * (-am**2 * np.cos(am * theta) + ap**2 * np.cos(ap * theta)) \
            - self.c2 * (-am * np.sin(am * theta) + ap * np.sin(ap * theta))

    def d3(self, theta):
        am, ap = self.a_minus, self.a_plus
        return self.c1 * (am**3 * np.sin(am * theta) - ap**3 * np.sin(ap * theta)) \
            - self.c2 * (-am**2 * np.cos(am * theta) + ap**2 * np.cos(ap * theta))

    def characteristic_residual(self):
        """Residual of sin^2(z w) = z^2 sin^2(w) at this profile's exponent."""
        return float(
            np.sin(self.z * self.omega) ** 2
            - self.z**2 * np.sin(self.omega) ** 2
        )

    def corner_condition_residuals(self):
        """|g|, |g'| at theta = 0 and theta = omega (all four must vanish)."""
        return np.abs(
            [self.value(0.0), self.d1(0.0), self.value(self.omega), self.d1(self.omega)]
        )
