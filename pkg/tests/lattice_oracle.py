"""Literal transliteration of the reference regional-model script (three lymph nodes).

Used only as an independent oracle in tests; keeps the original variable
names and hard-coded routing weights on purpose.
"""

import numpy as np

r1, r2 = 0.3954, 0.21
K, alpha = 1e6, 1e5
q1, q2 = 5.47e-5, 0.5 * (5.47e-5)
beta = 5.0976


def make_odes(theta0, thetainf, k_theta, gamma0, gammainf, k_gamma, phi=1e4, eta=0.0002):
    K1 = K2 = K3 = K / 10
    alpha1 = alpha2 = alpha3 = alpha / 10
    K_values = [K, K1, K2, K3]
    eta_values = [eta for i in range(4)]

    def theta(x):
        return thetainf * theta0 / (theta0 + (thetainf - theta0) * (np.exp((-1) * k_theta * x)))

    def gamma(x):
        return gammainf * gamma0 / (gamma0 + (gammainf - gamma0) * (np.exp((-1) * k_gamma * x)))

    def p(i, x):
        Lambda = ((-1) * np.log(0.3)) / K_values[i]
        return 1 - np.exp((-1) * Lambda * x)

    def ODEs(x, t):
        u, n, c, u1, n1, c1 = x[0], x[1], x[2], x[3], x[4], x[5]
        u2, n2, c2 = x[6], x[7], x[8]
        u3, n3, c3 = x[9], x[10], x[11]
        dudt = r1*u*(1 - (u+n)/K) - ((theta(c))*n*u)/(alpha + n) - eta_values[0]*u*p(0,u+n) + 0.05*eta_values[1]*u1*p(1,u1+n1)
        dndt = r2*n*(1 - (u+n)/K) + ((theta(c))*n*u)/(alpha + n) - (gamma(c))*n - eta_values[0]*n*p(0,u+n) + 0.05*eta_values[1]*n1*p(1,u1+n1)
        dcdt = phi - beta*c - q1*u*c - q2*n*c
        du1dt = r1*u1*(1 - (u1+n1)/K1) - ((theta(c1))*n1*u1)/(alpha1 + n1) - eta_values[1]*u1*p(1,u1+n1) + eta_values[0]*u*p(0,u+n) + 0.05*eta_values[2]*u2*p(2,u2+n2)
        dn1dt = r2*n1*(1 - (u1+n1)/K1) + ((theta(c1))*n1*u1)/(alpha1 + n1) - (gamma(c1))*n1 - eta_values[1]*n1*p(1,u1+n1) + eta_values[0]*n*p(0,u+n) + 0.05*eta_values[2]*n2*p(2,u2 + n2)
        dc1dt = (-1)*beta*c1 - q1*u1*c1 - q2*n1*c1
        du2dt = r1*u2*(1 - (u2+n2)/K2) - ((theta(c2))*n2*u2)/(alpha2 + n2) - eta_values[2]*u2*p(2,u2+n2) + 0.95*eta_values[1]*u1*p(1,u1+n1) + 0.05*eta_values[3]*u3*p(3,u3+n3)
        dn2dt = r2*n2*(1 - (u2+n2)/K2) + ((theta(c2))*n2*u2)/(alpha2 + n2) - (gamma(c2))*n2 - eta_values[2]*n2*p(2,u2+n2) + 0.95*eta_values[1]*n1*p(1,u1+n1) + 0.05*eta_values[3]*n3*p(3,u3+n3)
        dc2dt = (-1)*beta*c2 - q1*u2*c2 - q2*n2*c2
        du3dt = r1*u3*(1 - (u3+n3)/K3) - ((theta(c3))*n3*u3)/(alpha3 + n3) - 0.05*eta_values[3]*u3*p(3,u3+n3) + 0.95*eta_values[2]*u2*p(2,u2+n2)
        dn3dt = r2*n3*(1 - (u3+n3)/K3) + ((theta(c3))*n3*u3)/(alpha3 + n3) - (gamma(c3))*n3 - 0.05*eta_values[3]*n3*p(3,u3+n3) + 0.95*eta_values[2]*n2*p(2,u2+n2)
        dc3dt = (-1)*beta*c3 - q1*u3*c3 - q2*n3*c3
        return [dudt, dndt, dcdt, du1dt, dn1dt, dc1dt, du2dt, dn2dt, dc2dt, du3dt, dn3dt, dc3dt]

    return ODEs


init_0 = [10000, 100, 4.3751, 0, 0, 4.375, 0, 0, 4.375, 0, 0, 4.375]
