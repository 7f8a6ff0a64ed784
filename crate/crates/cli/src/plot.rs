//! Optional matplotlib scripts that redraw a data file. Nothing is rendered here.

const HEADER: &str = "import csv
import sys
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else DATA
rows = list(csv.DictReader(open(path)))


def col(name, keep=lambda r: True):
    return [float(r[name]) for r in rows if r[name] != '' and keep(r)]

";

fn body(command: &str) -> Option<&'static str> {
    Some(match command {
        "curve" => {
            "tau = col('tau')
plt.semilogx(tau, col('sigma_tau'), '-', label='Sigma_tau')
plt.semilogx(tau, col('dkl_inst'), '-.', label='D(p0 || p_tau)')
plt.semilogx(tau, col('dkl_asymp'), '--', label='D(p0 || p_inf)')
plt.xlabel('tau')
plt.ylabel('nats')
plt.legend()
"
        }
        "phase" => {
            "colors = {'Eraser': 'tab:red', 'Refrigerator': 'tab:blue', 'Dissipative': 'grey', 'Neutral': 'k'}
for mode, c in colors.items():
    keep = lambda r, m=mode: r['functional_mode'] == m
    plt.scatter(col('delta', keep), col('epsilon', keep), s=4, c=c, label=mode)
plt.plot([-1, 0, 1], [1, 0, 1], 'k--')
plt.xlabel('delta')
plt.ylabel('epsilon')
plt.legend()
"
        }
        "pareto" => {
            "eraser = lambda r: r['power'] != ''
plt.plot(col('efficiency', eraser), col('power', eraser))
best = lambda r: r['max_power'] == 'true'
plt.plot(col('efficiency', best), col('power', best), 'D')
plt.xlabel('eta_E')
plt.ylabel('P_E')
"
        }
        "emp" => {
            "plt.plot(col('eta_c'), col('eta_mp'), '-o', ms=3, label='eta_MP')
plt.plot(col('eta_c'), col('eta_lower'), 'k:', label='lower')
plt.plot(col('eta_c'), col('eta_upper'), 'k--', label='upper')
plt.xlabel('eta_C')
plt.ylabel('eta_MP')
plt.legend()
"
        }
        _ => return None,
    })
}

/// Script for `command` reading `data_file` by default; `None` when the
/// command has no figure.
pub fn script(command: &str, data_file: &str) -> Option<String> {
    let body = body(command)?;
    Some(format!(
        "DATA = {data_file:?}\n{HEADER}{body}plt.savefig(path + '.png', dpi=150)\n"
    ))
}
