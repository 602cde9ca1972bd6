#!/usr/bin/env python3
# Calibration driver: runs a sweep config, prints one verdict line per config.
import json, subprocess, sys, csv, io, statistics, itertools, os

BIN = "./build/tools/g2d"

def run(cfg, tag):
    out = f"/tmp/cal_{tag}"
    cfg = dict(cfg); cfg["output_dir"] = out
    cfgp = f"/tmp/cal_{tag}.json"
    with open(cfgp, "w") as f: json.dump(cfg, f)
    subprocess.run([BIN, "sweep", "--config", cfgp], capture_output=True)
    rows = {}
    seeds = cfg.get("seeds", [1])
    for s in seeds:
        with open(f"{out}/seed{s}/report.csv") as f:
            for r in csv.DictReader(f):
                k = int(r["K"])
                rows.setdefault(k, []).append({m: float(r[m]) for m in
                    ("rho","entropy","midband","harvest_pass1","downstream_acc")})
    ks = sorted(rows)
    mean = {k: {m: statistics.mean(x[m] for x in rows[k]) for m in rows[k][0]} for k in ks}
    # per-K sd of acc across seeds
    sd = {k: (statistics.stdev([x["downstream_acc"] for x in rows[k]]) if len(rows[k])>1 else 0.0) for k in ks}
    accs = [mean[k]["downstream_acc"] for k in ks]
    rhos = [mean[k]["rho"] for k in ks]
    mus  = [mean[k]["midband"] for k in ks]
    hs   = [mean[k]["entropy"] for k in ks]
    p1   = [mean[k]["harvest_pass1"] for k in ks]
    istar = max(range(1, len(ks)-1), key=lambda i: accs[i])  # best interior
    pooled0 = ((sd[ks[istar]]**2 + sd[ks[0]]**2)/2)**0.5
    pooledN = ((sd[ks[istar]]**2 + sd[ks[-1]]**2)/2)**0.5
    m0 = accs[istar]-accs[0]; mN = accs[istar]-accs[-1]
    rho_rel = (max(rhos)-min(rhos))/statistics.mean(rhos)
    mu_int = 0 < mus.index(max(mus)) < len(ks)-1
    h_int = 0 < hs.index(max(hs)) < len(ks)-1
    # per-seed correlations
    orderings = 0
    nseeds = len(seeds)
    for s in range(nseeds):
        a = [rows[k][s]["downstream_acc"] for k in ks]
        def pear(xs):
            mx, ma = statistics.mean(xs), statistics.mean(a)
            sxy = sum((x-mx)*(y-ma) for x,y in zip(xs,a))
            sxx = sum((x-mx)**2 for x in xs); syy = sum((y-ma)**2 for y in a)
            return sxy/ (sxx*syy)**0.5 if sxx>0 and syy>0 else float('nan')
        rr = pear([rows[k][s]["rho"] for k in ks])
        rh = pear([rows[k][s]["entropy"] for k in ks])
        rm = pear([rows[k][s]["midband"] for k in ks])
        if rh > rr and rm > rr: orderings += 1
    print(f"[{tag}] K*={ks[istar]} m0={m0:+.3f}({m0/pooled0 if pooled0>0 else 99:.1f}sd) "
          f"mN={mN:+.3f}({mN/pooledN if pooledN>0 else 99:.1f}sd) rho_rel={rho_rel:.2f} "
          f"mu_int={int(mu_int)} H_int={int(h_int)} ord={orderings}/{nseeds}")
    print("   acc: " + " ".join(f"{a:.3f}" for a in accs) + f"  (sd {' '.join(f'{sd[k]:.3f}' for k in ks)})")
    print("   rho: " + " ".join(f"{r:.3f}" for r in rhos))
    print("   mu : " + " ".join(f"{m:.3f}" for m in mus))
    print("   p1 : " + " ".join(f"{p:.3f}" for p in p1))
    sys.stdout.flush()

base = {
  "tasks": {"mixture": {"1": 300, "2": 350, "3": 350, "4": 300, "5": 200}},
  "eval": {"mixture": {"1": 90, "2": 105, "3": 105, "4": 90, "5": 60}},
  "grpo": {"learning_rate": 0.25},
  "dpo": {"learning_rate": 0.8, "batch_size": 64},
  "seeds": [1, 2, 3],
}

if __name__ == "__main__":
    import copy
    for i, arg in enumerate(sys.argv[1:]):
        cfg = copy.deepcopy(base)
        for kv in arg.split(";"):
            if not kv: continue
            path, val = kv.split("=")
            node = cfg
            parts = path.split(".")
            for p in parts[:-1]: node = node.setdefault(p, {})
            node[parts[-1]] = json.loads(val)
        run(cfg, f"v{i}")
