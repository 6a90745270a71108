import argparse
import logging
import os
import sys
from logging.handlers import RotatingFileHandler

from core import config
from core import dot
from core import formats
from core import leakage as leak
from core import planner
from core import simulator
from core import strategy as strat
from core.catalog import CATALOG
from core.errors import InvalidMechanism, ParseError, QIFError, UnsupportedMeasure
from core.measures import MEASURES, Belief, expected_score, get_measure, psr_from_measure
from core.mechanism import indistinguishability_classes, validate
from core.table_ingest import parse_noise_spec, read_table, table_ingest

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def setup_logging(app_config, verbose=False):
    """Console logging on stderr; a rotating verbose log when debugging is enabled."""
    root = logging.getLogger()
    root.setLevel(logging.INFO if verbose else logging.WARNING)
    if verbose and not any(type(h) is logging.StreamHandler for h in root.handlers):
        console = logging.StreamHandler(sys.stderr)
        console.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(console)

    debug_cfg = app_config.get('debugging', {})
    if debug_cfg.get('enabled', False):
        log_dir = debug_cfg['output_path']
        os.makedirs(log_dir, exist_ok=True)
        verbose_log_file = os.path.join(log_dir, debug_cfg['verbose_log_file'])
        # Use a rotating file handler to prevent logs from growing indefinitely
        handler = RotatingFileHandler(verbose_log_file, maxBytes=5*1024*1024, backupCount=2)
        handler.setLevel(logging.DEBUG)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        if not any(isinstance(h, RotatingFileHandler) for h in root.handlers):
            root.addHandler(handler)
        root.setLevel(logging.DEBUG)
        logger.info("--- Verbose Logging Session Started ---")


# --- Helpers ---

def _num(x):
    return f"{formats.round_sig(x):.12g}"


def _load_mechanism(args, app_config):
    """Loads --mechanism and refuses rows that are not probability distributions."""
    mech, prior = formats.load_mechanism(args.mechanism)
    report = validate(mech, app_config['numerics']['tolerance'])
    if not report.ok:
        raise InvalidMechanism(f"{args.mechanism} is not a valid mechanism:\n  "
                               + "\n  ".join(report.lines()))
    return mech, prior if prior is not None else mech.uniform_prior()


def _measure(args, mech=None):
    values = mech.secret_values if mech is not None else None
    return get_measure(args.measure, values)


def _rational(mech, prior, measure, app_config):
    """Exact fractions are reported only for measures that stay rational on rational inputs."""
    if measure.kind == 'shannon':
        return False
    max_den = app_config['output']['max_denominator']
    return (formats.all_rational(mech.matrices.ravel(), max_den)
            and formats.all_rational(prior.probs, max_den))


def _report(values, app_config, rational=False):
    out = app_config['output']
    return formats.report_numbers(values, out['significant_digits'], out['max_denominator'], rational)


def _write_text(text, path):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    print(f"Wrote {path}")


def _parse_belief(text):
    """A JSON file holding a list (or {"probs": [...]}) or an inline list like 0.5,0.5."""
    if os.path.exists(text):
        doc = formats.read_json(text)
        values = doc.get('probs') if isinstance(doc, dict) else doc
        if not isinstance(values, list):
            raise ParseError(f"{text} must hold a list of probabilities")
    else:
        values = [v for v in text.strip().strip('()[]').split(',') if v.strip()]
    return Belief([formats.parse_probability(v) for v in values])


# --- Commands ---

def cmd_validate(args, app_config):
    mech, _ = formats.load_mechanism(args.path)
    report = validate(mech, app_config['numerics']['tolerance'])
    if args.json is not None:
        formats.write_json({'valid': report.ok, 'violations': report.lines()}, args.json)
    elif report.ok:
        a, x, y = mech.shape
        print(f"✅ Mechanism is valid: {x} secrets, {y} observations, {a} actions")
    else:
        for line in report.lines():
            print(line)
    return 0 if report.ok else 1


def cmd_leakage(args, app_config):
    mech, prior = _load_mechanism(args, app_config)
    s = formats.load_strategy(args.strategy)
    measure = _measure(args, mech)
    budget = app_config['planner']['node_budget']
    report = leak.leakage(mech, prior, s, measure,
                          prune=app_config['numerics']['prune_threshold'], node_budget=budget)
    if args.dot:
        tree = leak.build_attack_tree(mech, prior, s, node_budget=budget)
        _write_text(dot.attack_tree_dot(tree, coalesce=args.coalesce,
                                        max_denominator=app_config['output']['max_denominator']), args.dot)
    if args.json is not None:
        rational = _rational(mech, prior, measure, app_config)
        formats.write_json(_report(report.to_dict(), app_config, rational), args.json)
    else:
        print(f"measure: {report.measure}")
        print(f"prior uncertainty: {_num(report.prior_uncertainty)}")
        print(f"conditional uncertainty: {_num(report.conditional_uncertainty)}")
        print(f"leakage: {_num(report.leakage)}")
        print(f"strategy length: {report.strategy_length}, traces: {report.trace_count}")
    return 0


def cmd_tree(args, app_config):
    mech, prior = _load_mechanism(args, app_config)
    s = formats.load_strategy(args.strategy)
    tree = leak.build_attack_tree(mech, prior, s, node_budget=app_config['planner']['node_budget'])
    if args.dot:
        _write_text(dot.attack_tree_dot(tree, coalesce=args.coalesce,
                                        max_denominator=app_config['output']['max_denominator']), args.dot)
    if args.json is not None or not args.dot:
        formats.write_json(formats.attack_tree_to_dict(tree, app_config['output']['significant_digits']),
                           args.json)
    return 0


def cmd_optimal(args, app_config):
    mech, prior = _load_mechanism(args, app_config)
    measure = _measure(args, mech)
    if args.exhaustive:
        result = planner.exhaustive_oracle(mech, prior, measure, args.horizon,
                                           limit=app_config['planner']['oracle_limit'])
    else:
        result = planner.optimal_strategy(mech, prior, measure, args.horizon,
                                          node_budget=app_config['planner']['node_budget'])
    if args.out:
        formats.write_json(formats.strategy_to_json(result.strategy), args.out)
    if args.dot:
        _write_text(dot.strategy_dot(result.strategy, mech.observations, name='OptimalStrategy'), args.dot)
    if args.json is not None:
        formats.write_json(_report(result.to_dict(), app_config), args.json)
    else:
        print(f"value: {_num(result.value)}")
        print(f"root action: {result.root_action}")
        for action, value in result.root_action_values().items():
            print(f"  {action}: {_num(value)}")
        print(f"decision nodes: {result.nodes_expanded}")
    return 0


def cmd_classes(args, app_config):
    mech, _ = _load_mechanism(args, app_config)
    partition = indistinguishability_classes(mech, app_config['numerics']['tolerance'])
    labelled = partition.labelled(mech)
    if args.json is not None:
        formats.write_json({'K': partition.K, 'classes': labelled}, args.json)
    else:
        print(f"K = {partition.K}")
        for members in labelled:
            print("{" + ", ".join(members) + "}")
    return 0


def cmd_maxleak(args, app_config):
    mech, prior = _load_mechanism(args, app_config)
    measure = _measure(args, mech)
    value = leak.max_leakage(mech, prior, measure, app_config['numerics']['tolerance'])
    if args.json is not None:
        formats.write_json(_report({'measure': measure.label, 'max_leakage': value}, app_config,
                                   _rational(mech, prior, measure, app_config)), args.json)
    else:
        print(f"max leakage ({measure.label}): {_num(value)}")
    return 0


def cmd_capacity(args, app_config):
    mech, _ = _load_mechanism(args, app_config)
    if args.measure not in leak.CLOSED_FORM_CAPACITY and not args.search:
        raise UnsupportedMeasure(f"No closed-form capacity for the '{args.measure}' measure; "
                                 "pass --search to estimate it.")
    measure = _measure(args, mech)
    tol = app_config['numerics']['tolerance']
    doc = {'measure': measure.label}
    try:
        doc['capacity'] = leak.capacity(mech, measure, tol)
        doc['method'] = 'closed form'
    except UnsupportedMeasure:
        if not args.search:
            raise
        search_cfg = app_config['capacity_search']
        restarts = args.restarts if args.restarts is not None else search_cfg['restarts']
        seed = args.seed if args.seed is not None else search_cfg['seed']
        found = leak.capacity_search(mech, measure, restarts=restarts, seed=seed, tol=tol)
        doc['capacity'] = found.value
        doc['method'] = 'search'
        doc['prior'] = [formats.round_sig(float(v)) for v in found.prior.probs]
    if args.json is not None:
        formats.write_json(_report(doc, app_config), args.json)
    else:
        print(f"capacity ({doc['measure']}, {doc['method']}): {_num(doc['capacity'])}")
    return 0


def cmd_expand(args, app_config):
    s = formats.load_strategy(args.strategy)
    observations = None
    mech = None
    if args.mechanism:
        mech, _ = _load_mechanism(args, app_config)
        observations = mech.observations
    if args.dedupe_deterministic:
        if mech is None:
            raise ParseError("--dedupe-deterministic needs --mechanism")
        expanded = strat.dedupe_for_deterministic(strat.expand_nonadaptive(s, observations), mech)
    else:
        expanded = strat.expand_nonadaptive(s, observations)
    formats.write_json(formats.strategy_to_json(expanded), args.out)
    return 0


def cmd_ingest(args, app_config):
    df = read_table(args.csv)
    attrs = [a.strip() for a in args.attrs.split(',') if a.strip()]
    mech = table_ingest(df, args.secret_col, attrs, parse_noise_spec(args.noise),
                        secret_values_column=args.values_col)
    formats.write_json(formats.mechanism_to_dict(mech, digits=app_config['output']['significant_digits'],
                                                 max_denominator=app_config['output']['max_denominator']),
                       args.out)
    return 0


def cmd_simulate(args, app_config):
    mech, prior = _load_mechanism(args, app_config)
    s = formats.load_strategy(args.strategy)
    sim_cfg = app_config['simulation']
    sim = simulator.SimConfig(
        trials=args.trials if args.trials is not None else sim_cfg['trials'],
        seed=args.seed if args.seed is not None else sim_cfg['seed'],
        chunk_size=sim_cfg['chunk_size'],
        workers=args.workers if args.workers is not None else sim_cfg['workers'],
    )
    result = simulator.estimate_leakage(mech, prior, s, _measure(args, mech), sim)
    formats.write_json(_report(result.to_dict(), app_config), args.json)
    return 0


def cmd_probe(args, app_config):
    mech, prior = _load_mechanism(args, app_config)
    profile = simulator.convergence_probe(mech, prior, _measure(args, mech), args.rounds,
                                          node_budget=app_config['planner']['node_budget'])
    frame = profile.to_frame()
    if args.csv:
        frame.to_csv(args.csv, index=False, float_format='%.12g')
        print(f"Wrote {args.csv}")
    else:
        print(frame.to_csv(index=False, float_format='%.12g'), end='')
    return 0


def cmd_psr(args, app_config):
    values = None
    if args.values:
        values = [float(v) for v in args.values.split(',')]
    elif args.mechanism:
        values = _load_mechanism(args, app_config)[0].secret_values
    rule = psr_from_measure(get_measure(args.measure, values))
    forecast = _parse_belief(args.at)
    scores = rule.scores(forecast)
    doc = {'measure': args.measure, 'forecast': [formats.round_sig(float(v)) for v in forecast.probs],
           'scores': [formats.round_sig(float(v)) for v in scores]}
    if args.truth:
        doc['expected_score'] = formats.round_sig(expected_score(rule, _parse_belief(args.truth), forecast))
    if args.json is not None:
        formats.write_json(doc, args.json)
    else:
        print("scores: " + ", ".join(_num(v) for v in scores))
        if 'expected_score' in doc:
            print(f"expected score: {_num(doc['expected_score'])}")
    return 0


def cmd_catalog(args, app_config):
    mech = CATALOG[args.name](args.size)
    formats.write_json(formats.mechanism_to_dict(mech), args.out)
    return 0


# --- Parser ---

def _add_json(p):
    p.add_argument('--json', nargs='?', const='-', default=None, metavar='PATH',
                   help='Emit JSON (to PATH, or stdout when no path is given)')


def _add_measure(p):
    p.add_argument('--measure', choices=list(MEASURES), default='shannon',
                   help='Uncertainty measure (default: shannon)')


def build_parser():
    parser = argparse.ArgumentParser(
        description='Quantitative information flow of action-based mechanisms under adaptive adversaries.')
    parser.add_argument('--config', default=None, help=f'Configuration file (default: {config.CONFIG_PATH})')
    parser.add_argument('-v', '--verbose', action='store_true', help='Log progress to stderr')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('validate', help='Check that every matrix row is a distribution')
    p.add_argument('path')
    _add_json(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser('leakage', help='Exact leakage of a strategy')
    p.add_argument('--mechanism', required=True)
    p.add_argument('--strategy', required=True)
    _add_measure(p)
    _add_json(p)
    p.add_argument('--dot', metavar='PATH', help='Also write the attack tree as DOT')
    p.add_argument('--coalesce', action='store_true', help='Merge sibling leaves with equal beliefs in DOT')
    p.set_defaults(func=cmd_leakage)

    p = sub.add_parser('tree', help='Attack tree of a strategy as JSON or DOT')
    p.add_argument('--mechanism', required=True)
    p.add_argument('--strategy', required=True)
    _add_json(p)
    p.add_argument('--dot', metavar='PATH')
    p.add_argument('--coalesce', action='store_true')
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser('optimal', help='Optimal strategy by backward induction')
    p.add_argument('--mechanism', required=True)
    p.add_argument('--horizon', type=int, required=True)
    _add_measure(p)
    p.add_argument('--out', metavar='PATH', help='Write the optimal strategy as JSON')
    p.add_argument('--dot', metavar='PATH', help='Write the optimal strategy as DOT')
    p.add_argument('--exhaustive', action='store_true', help='Enumerate complete strategies instead')
    _add_json(p)
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser('classes', help='Indistinguishability classes')
    p.add_argument('--mechanism', required=True)
    _add_json(p)
    p.set_defaults(func=cmd_classes)

    p = sub.add_parser('maxleak', help='Maximum leakage over all strategies')
    p.add_argument('--mechanism', required=True)
    _add_measure(p)
    _add_json(p)
    p.set_defaults(func=cmd_maxleak)

    p = sub.add_parser('capacity', help='Adaptive secrecy capacity')
    p.add_argument('--mechanism', required=True)
    _add_measure(p)
    p.add_argument('--search', action='store_true', help='Search numerically when no closed form exists')
    p.add_argument('--restarts', type=int)
    p.add_argument('--seed', type=int)
    _add_json(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser('expand', help='Non-adaptive expansion of a strategy')
    p.add_argument('--strategy', required=True)
    p.add_argument('--dedupe-deterministic', action='store_true')
    p.add_argument('--mechanism', help='Order observations by this alphabet (default: sorted labels)')
    p.add_argument('--out', metavar='PATH')
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser('ingest', help='Build a mechanism from a CSV table')
    p.add_argument('--csv', required=True)
    p.add_argument('--secret-col', required=True)
    p.add_argument('--attrs', required=True, help='Comma separated attribute columns')
    p.add_argument('--noise', action='append', default=[], metavar='COL:RADIUS',
                   help='Uniform offset noise on an integer column (repeatable)')
    p.add_argument('--values-col', help='Column with numeric secret values')
    p.add_argument('--out', metavar='PATH')
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser('simulate', help='Monte Carlo leakage estimate')
    p.add_argument('--mechanism', required=True)
    p.add_argument('--strategy', required=True)
    _add_measure(p)
    p.add_argument('--trials', type=int)
    p.add_argument('--seed', type=int)
    p.add_argument('--workers', type=int)
    _add_json(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('probe', help='Lock-step convergence table')
    p.add_argument('--mechanism', required=True)
    _add_measure(p)
    p.add_argument('--rounds', type=int, default=10)
    p.add_argument('--csv', metavar='PATH')
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser('psr', help='Proper scoring rule of a measure')
    _add_measure(p)
    p.add_argument('--at', required=True, help='Forecast: JSON file or inline list such as 0.5,0.5')
    p.add_argument('--truth', help='Truth belief for the expected score')
    p.add_argument('--values', help='Comma separated secret values (variance)')
    p.add_argument('--mechanism', help='Take secret values from a mechanism file')
    _add_json(p)
    p.set_defaults(func=cmd_psr)

    p = sub.add_parser('catalog', help='Write a built-in mechanism as JSON')
    p.add_argument('name', choices=sorted(CATALOG))
    p.add_argument('--size', type=int)
    p.add_argument('--out', metavar='PATH')
    p.set_defaults(func=cmd_catalog)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        app_config = config.load_config(args.config)
        setup_logging(app_config, args.verbose)
        return args.func(args, app_config)
    except QIFError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
