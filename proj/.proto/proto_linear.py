import numpy as np
from scipy.integrate import solve_ivp

def model(alpha):
    q0 = alpha ** (1.0 / (alpha + 2))
    estar = -0.5 * (alpha + 2) ** 2 * alpha ** (-alpha / (alpha + 2))
    return q0, estar

def V(alpha, x, y):
    r = np.hypot(x, y)
    return -0.5 * (alpha + 2) * x * x - (alpha + 2) * r ** (-alpha)

def gradV(alpha, x, y):
    r = np.hypot(x, y)
    ram2 = r ** (-alpha - 2)
    return (-(alpha + 2) * x + alpha * (alpha + 2) * x * ram2,
            alpha * (alpha + 2) * y * ram2)

def energy_s(alpha, s):
    x, y, px, py = s
    return 0.5 * ((px + y) ** 2 + (py - x) ** 2) + V(alpha, x, y)

def W(alpha, x, y):
    r = np.hypot(x, y)
    return (alpha + 2) * (x * x - alpha * r ** (-alpha))

def K_s(alpha, s):
    x, y, px, py = s
    r = np.hypot(x, y)
    return px*px + py*py + (alpha+1)*x*x - y*y - alpha*(alpha+2)*r**(-alpha)

def field(alpha, s):
    x, y, px, py = s
    vx, vy = gradV(alpha, x, y)
    xd = px + y; yd = py - x
    return np.array([xd, yd, yd - vx, -xd - vy])

J = np.zeros((4,4)); J[0,2]=1; J[1,3]=1; J[2,0]=-1; J[3,1]=-1
def Om(u, v): return (J@u) @ v

def hess(alpha):
    a = alpha
    return np.array([[1-(a+2)**2, 0, 0, -1],
                     [0, 1+(a+2), 1, 0],
                     [0, 1, 1, 0],
                     [-1, 0, 0, 1]], float)

def rates(alpha):
    a = alpha
    D = np.sqrt(36+36*a+29*a*a+10*a**3+a**4)
    c = a*a+3*a-2
    return np.sqrt((D+c)/2), np.sqrt((D-c)/2)

def build_basis(alpha):
    q0, estar = model(alpha)
    S = hess(alpha); A = J @ S
    k, w = rates(alpha)
    ev, evec = np.linalg.eig(A)
    # verify closed-form rates
    print(f'alpha={alpha}: k={k:.6f} w={w:.6f}  eig={sorted(ev, key=lambda z: (z.real, z.imag))}')
    # real eigenvectors for +-k
    def kernel(M):
        u, sv, vt = np.linalg.svd(M)
        return vt[-1]
    vp = kernel(A - k*np.eye(4)); vp /= np.linalg.norm(vp)
    vm = kernel(A + k*np.eye(4)); vm /= np.linalg.norm(vm)
    c = Om(vp, vm)
    sc = 1/np.sqrt(abs(c))
    xp = sc*vp; xm = (sc if c > 0 else -sc) * vm
    Q0 = np.array([-q0, 0, 0, q0])
    if Om(Q0, xp) < 0: xp, xm = -xp, -xm
    # center plane
    u, sv, vt = np.linalg.svd(A@A + w*w*np.eye(4))
    e1 = vt[-1]
    e2 = A @ e1 / w
    d = Om(e1, e2)
    print('  center pairing d =', d, ' (want > 0)')
    e1 /= np.sqrt(d); e2 /= np.sqrt(d)
    Qt = np.array([q0, 0, 0, q0])
    print('  Om(Q0,xi+)=', Om(Q0,xp), ' -Om(Qt,xi+)=', -Om(Qt,xp))
    print('  |xi+|=',np.linalg.norm(xp),' |xi-|=',np.linalg.norm(xm),' Om(xp,xm)=',Om(xp,xm))
    print('  A e1 - w e2:', np.max(np.abs(A@e1 - w*e2)), ' A e2 + w e1:', np.max(np.abs(A@e2 + w*e1)))
    # Gram of P
    P = np.column_stack([xp, e1, xm, e2])
    G = np.array([[Om(P[:,i],P[:,j]) for j in range(4)] for i in range(4)])
    print('  Gram == J:', np.max(np.abs(G - J)))
    print('  P^T J P + J:', np.max(np.abs(P.T@J@P + J)))
    # Om(gamma, A gamma) = w(a^2+b^2)?
    a_, b_ = 0.3, -0.7
    g = a_*e1 + b_*e2
    print('  Om(g,Ag) =', Om(g, A@g), ' vs w(a^2+b^2) =', w*(a_*a_+b_*b_))
    return q0, estar, k, w, xp, xm, e1, e2, A, S

def decompose(basis, s, sigma=+1):
    q0, estar, k, w, xp, xm, e1, e2, A, S = basis
    Qt = np.array([q0, 0, 0, q0])
    X = sigma*np.asarray(s) - Qt
    lp = Om(X, xm); lm = -Om(X, xp)
    g = X - lp*xp - lm*xm
    a = Om(g, e2); b = -Om(g, e1)
    n2 = 0.5*k*(lp*lp+lm*lm) + 0.5*w*(a*a+b*b)
    return lp, lm, a, b, n2

def c_rem(basis, alpha, s, sigma=+1):
    q0, estar, k, w, xp, xm, e1, e2, A, S = basis
    lp, lm, a, b, n2 = decompose(basis, s, sigma)
    return energy_s(alpha, s) - estar + 0.5*k*(lp+lm)**2 - n2, n2

for al in [0.5, 1.0, 2.0, 3.0, 5.0, 10.0]:
    build_basis(al)

print()
print('=== delta_E estimate (alpha=2) ===')
alpha = 2.0
basis = build_basis(alpha)
q0, estar, k, w, xp, xm, e1, e2, A, S = basis
rng = np.random.default_rng(7)
Qt = np.array([q0,0,0,q0])
def sampleX(radius):
    c = rng.normal(size=4); c /= np.linalg.norm(c)
    rho = radius * rng.random()**0.25
    c *= rho
    return c[0]*np.sqrt(2/k)*xp + c[1]*np.sqrt(2/k)*xm + c[2]*np.sqrt(2/w)*e1 + c[3]*np.sqrt(2/w)*e2

for delta in [0.1, 0.05, 0.02, 0.01, 0.005]:
    worst = 0
    for _ in range(20000):
        X = sampleX(4*delta)
        C, n2 = c_rem(basis, alpha, Qt + X)
        if n2 > 0: worst = max(worst, abs(C)/n2)
    print(f'delta={delta}: worst |C|/|X|E^2 over ball 4*delta = {worst:.4f} (need <= 0.1)')
