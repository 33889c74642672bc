"""
Weight functions and the constant M_theta
=========================================

Power-mean weights interpolate between the logarithmic and arithmetic means.
The numerical supremum converges slowly for alpha in (3/2, 2).
"""

import numpy as np

from curvlab.weights import check_weight, m_theta_closed_form, m_theta_numeric, theta_alpha

for alpha in np.round(np.linspace(1.0, 2.0, 11), 10):
    theta = theta_alpha(float(alpha))
    lo, hi = m_theta_numeric(theta)[:2]
    print(f"alpha={alpha:.1f}  closed={m_theta_closed_form(alpha):.4f}  numeric in [{lo:.4f}, {hi:.4f}]")

print(check_weight(theta_alpha(1.5)))
