"""yaglom: dissipation functionals, third-order structure functions and 4/3 law checks.

Command-line entry point. Each subcommand reads a JSON run-config, resolves
its field slots and writes ``report.json`` plus CSV curves into the output
directory::

    yaglom lawcheck --config run.json --out results --threads 4
"""

import logging
import os
from logging import StreamHandler, getLogger

import numpy as np
from scipy import fft
from traitlets import Bool, Dict, Integer, TraitError, Unicode, validate
from traitlets.config.application import Application, catch_config_error

from lib._version import __version__
from lib.catalog import CATALOG
from lib.config import (
    SECTIONS,
    ExponentConfig,
    FunctionalConfig,
    GridConfig,
    MollifierConfig,
    OutputConfig,
    SolverConfig,
    SphereConfig,
    SweepConfig,
    section_values,
)
from lib.errors import ConfigError, YaglomError
from lib.fieldio import write_field
from lib.fieldset import FieldSet
from lib.functionals import (
    DissipationSweep,
    dissipation_direct,
    dissipation_sweep,
    law_check,
    structure_curve,
)
from lib.report import RunReport, config_hash
from lib.slots import SlotResolver
from lib.solver import advect, balance_residual
from lib.systems import conservation_predictor, scaling_exponent, vorticity
from lib.utils import loglog_slope

# Library modules log under the package logger; the application owns its handler.
LIBRARY_LOGGER = getLogger("lib")
FIELD_SUFFIX = ".ygf"

yaglom_aliases = {
    "config": "YaglomSubcommand.config_file",
    "out": "OutputConfig.directory",
    "threads": "YaglomSubcommand.threads",
    "seed": "YaglomSubcommand.seed",
    "log-level": "Application.log_level",
}

yaglom_flags = {
    "debug": (
        {"Application": {"log_level": logging.DEBUG}},
        "set log level to logging.DEBUG (maximize logging output)",
    ),
}


class YaglomSubcommand(Application):
    """Shared plumbing: config loading, slot resolution, reports and exit codes."""

    version = __version__
    aliases = dict(yaglom_aliases)
    flags = dict(yaglom_flags)
    raise_config_file_errors = Bool(True)

    config_file = Unicode("", config=True, help="JSON run-config file.")
    threads = Integer(1, config=True, help="Worker threads of the FFTs.")
    seed = Integer(None, allow_none=True, config=True, help="Override the seed of every generator.")

    @validate("threads")
    def _valid_threads(self, proposal):
        if proposal["value"] < 1:
            raise TraitError("threads must be >= 1")
        return proposal["value"]

    @validate("seed")
    def _valid_seed(self, proposal):
        seed = proposal["value"]
        if seed is not None and not 0 <= seed < 2 ** 64:
            raise TraitError("seed must be an unsigned 64-bit integer, got {}".format(seed))
        return seed

    @catch_config_error
    def initialize(self, argv=None):
        super(YaglomSubcommand, self).initialize(argv)
        self.init_logging()
        if self.config_file:
            try:
                self.load_run_config(self.config_file)
            except YaglomError as error:
                self.fail(error)
        self.init_sections()

    def init_logging(self):
        if not LIBRARY_LOGGER.handlers:
            handler = StreamHandler()
            handler.setFormatter(logging.Formatter("[%(name)s] %(message)s"))
            LIBRARY_LOGGER.addHandler(handler)
        LIBRARY_LOGGER.setLevel(self.log_level)

    def load_run_config(self, path):
        if os.path.splitext(path)[1].lower() != ".json":
            raise ConfigError("run-config {} must be a .json file".format(path))
        if not os.path.isfile(path):
            raise ConfigError("run-config {} does not exist".format(path))
        directory, filename = os.path.split(os.path.abspath(path))
        try:
            self.load_config_file(filename, path=directory)
        except TraitError:
            raise
        except Exception as error:
            raise ConfigError("cannot parse run-config {}: {}".format(path, error)) from error
        self.log.info("loaded run-config %s", path)

    def init_sections(self):
        self.sections = {cls.__name__: cls(parent=self) for cls in SECTIONS}

    def section(self, cls):
        return self.sections[cls.__name__]

    @property
    def grid(self):
        return self.section(GridConfig).grid()

    def effective_config(self):
        return {name: section_values(s) for name, s in sorted(self.sections.items())}

    def resolver(self):
        functional = self.section(FunctionalConfig)
        base = os.path.dirname(os.path.abspath(self.config_file)) if self.config_file else os.getcwd()
        return SlotResolver(functional.slots, self.grid, self.seed, functional.alpha, base)

    def sphere(self):
        return self.section(SphereConfig).sphere()

    def ball(self):
        return self.section(SphereConfig).ball(self.section(MollifierConfig))

    def new_report(self):
        output = self.section(OutputConfig)
        config = self.effective_config()
        digest = config_hash(config)
        self.log.info("%s run, config %s", self.name, digest[:12])
        report = RunReport(output.directory, output.formats)
        report.add(
            command=self.name,
            version=__version__,
            config=config,
            config_hash=digest,
            seed=self.seed,
        )
        return report

    def write_inputs(self, report, fields):
        """Store resolved input fields when ``OutputConfig.write_fields`` is set."""
        if not self.section(OutputConfig).write_fields:
            return {}
        stored = {}
        for name, value in sorted(fields.items()):
            path = report.path(name + FIELD_SUFFIX)
            stored[name] = {"file": os.path.basename(path), "sha256": write_field(path, value)}
            report.files.append(path)
        return stored

    def fail(self, error):
        self.log.error("%s", error)
        self.exit(error.exit_code)

    def start(self):
        try:
            with fft.set_workers(self.threads):
                self.run()
        except YaglomError as error:
            self.fail(error)

    def run(self):
        raise NotImplementedError


class GenerateApp(YaglomSubcommand):
    name = "yaglom generate"
    description = """Write every configured field slot to a field file."""
    classes = list(SECTIONS)

    def run(self):
        functional = self.section(FunctionalConfig)
        if not functional.slots:
            raise ConfigError("FunctionalConfig.slots is empty; nothing to generate")
        report = self.new_report()
        resolver = self.resolver()
        fields = {}
        for name in sorted(functional.slots):
            value = resolver[name]
            path = report.path(name + FIELD_SUFFIX)
            digest = write_field(path, value)
            report.files.append(path)
            fields[name] = {
                "file": os.path.basename(path),
                "sha256": digest,
                "type": type(value).__name__,
            }
            self.log.info("wrote %s (%s)", path, type(value).__name__)
        report.add(fields=fields, input_hashes=resolver.hashes)
        report.write()


class FunctionalSubcommand(YaglomSubcommand):
    """Subcommands evaluating one catalog entry on the configured slots."""

    def field_set(self, entry, resolver):
        functional = self.section(FunctionalConfig)
        names = [s for s in entry.required_fields if s != "alpha"]
        fields = resolver.resolve(names)
        return FieldSet(fields, functional.alpha)

    def labels(self, entry):
        return [term.label() for term in entry.d_terms]

    def evaluate_curve(self, entry, fields):
        sweep = self.section(SweepConfig)
        method = self.section(FunctionalConfig).shift_method()
        return structure_curve(fields, entry, sweep.lambda_values(self.grid), self.sphere(), method)

    def evaluate_sweep(self, entry, fields):
        sweep = self.section(SweepConfig)
        functional = self.section(FunctionalConfig)
        return dissipation_sweep(
            fields,
            entry,
            sweep.epsilon_values(self.grid),
            self.ball(),
            functional.shift_method(),
            functional.family,
        )

    def add_dissipation(self, report, entry, d_sweep):
        if isinstance(d_sweep, DissipationSweep):
            report.add_curve(
                "dissipation.csv",
                d_sweep.epsilons,
                d_sweep.d_values,
                d_sweep.term_values,
                self.labels(entry),
            )
            report.add(dissipation_quadrature=d_sweep.quadrature)
        else:
            pairs = list(d_sweep)
            report.add_curve(
                "dissipation.csv", [e for e, _ in pairs], [d for _, d in pairs], [()] * len(pairs), []
            )


class StructureApp(FunctionalSubcommand):
    name = "yaglom structure"
    description = """Box-mean structure function S(lambda) of a catalog entry."""
    classes = list(SECTIONS)

    def run(self):
        entry = self.section(FunctionalConfig).require_slots()
        report = self.new_report()
        resolver = self.resolver()
        fields = self.field_set(entry, resolver)
        curve = self.evaluate_curve(entry, fields)
        report.add_curve(
            "structure.csv", curve.lambdas, curve.g_values, curve.term_values, self.labels(entry)
        )
        report.add(
            entry=entry.id,
            lambdas=curve.lambdas,
            structure=curve.g_values,
            quadrature=curve.quadrature,
            notes=entry.notes_for_report(),
            input_hashes=resolver.hashes,
            stored_fields=self.write_inputs(report, dict(fields.slots)),
        )
        report.write()


class DissipationApp(FunctionalSubcommand):
    name = "yaglom dissipation"
    description = """Box-mean dissipation D_eps over an epsilon sweep."""
    classes = list(SECTIONS)

    def run(self):
        entry = self.section(FunctionalConfig).require_slots()
        report = self.new_report()
        resolver = self.resolver()
        fields = self.field_set(entry, resolver)
        d_sweep = self.evaluate_sweep(entry, fields)
        self.add_dissipation(report, entry, d_sweep)
        stored = {}
        if self.section(OutputConfig).write_fields:
            functional = self.section(FunctionalConfig)
            for index, eps in enumerate(d_sweep.epsilons):
                density = dissipation_direct(
                    fields, entry, eps, self.ball(), functional.shift_method(), functional.family
                )
                stored["D_eps{}".format(index)] = density.values
        report.add(
            entry=entry.id,
            epsilons=d_sweep.epsilons,
            dissipation=d_sweep.d_values,
            notes=entry.notes_for_report(),
            input_hashes=resolver.hashes,
            stored_fields=self.write_inputs(report, dict(fields.slots, **stored)),
        )
        report.write()


class LawCheckApp(FunctionalSubcommand):
    name = "yaglom lawcheck"
    description = """Extrapolate S and D of a catalog entry and compare S/D with -4/3."""
    classes = list(SECTIONS)

    predict = Bool(
        False,
        config=True,
        help="For HELICITY, attach the regularity-based conservation prediction.",
    )
    flags = dict(
        yaglom_flags,
        predict=({"LawCheckApp": {"predict": True}}, "Attach the helicity conservation prediction."),
    )

    # Test hook: a callable (app) -> (curve, d_sweep) replacing the field evaluation.
    sweep_provider = None

    def prediction(self, fields):
        exponents = self.section(ExponentConfig)
        lambdas = exponents.lambdas or None
        method = self.section(FunctionalConfig).shift_method()
        est_v = scaling_exponent(fields["v"], exponents.velocity_order, lambdas, self.sphere(), method)
        est_omega = scaling_exponent(
            fields["omega"], exponents.vorticity_order, lambdas, self.sphere(), method
        )
        return conservation_predictor(est_v, est_omega, exponents.r1, exponents.r2).to_dict()

    def run(self):
        entry = self.section(FunctionalConfig).require_slots()
        sweep = self.section(SweepConfig)
        report = self.new_report()
        resolver = self.resolver()
        prediction = None
        if self.sweep_provider is not None:
            curve, d_sweep = self.sweep_provider(self)
        else:
            fields = self.field_set(entry, resolver)
            curve = self.evaluate_curve(entry, fields)
            d_sweep = self.evaluate_sweep(entry, fields)
            if self.predict and entry.id == "HELICITY":
                prediction = self.prediction(fields)
        law = law_check(
            curve,
            d_sweep,
            sweep.ratio_tolerance,
            sweep.noise_floor,
            sweep.plateau_window,
            sweep.plateau_tolerance,
            prediction,
        )
        report.add_curve(
            "structure.csv", curve.lambdas, curve.g_values, curve.term_values, self.labels(entry)
        )
        self.add_dissipation(report, entry, d_sweep)
        report.add(
            entry=entry.id,
            law=law.to_dict(),
            structure_quadrature=curve.quadrature,
            input_hashes=resolver.hashes,
        )
        self.log.info("%s verdict: %s", entry.id, law.verdict.value)
        report.write()


class BalanceApp(YaglomSubcommand):
    name = "yaglom balance"
    description = """Advect the scalar slot and check the local energy balance."""
    classes = list(SECTIONS)

    def run(self):
        solver = self.section(SolverConfig)
        report = self.new_report()
        resolver = self.resolver()
        inputs = FieldSet.of(
            v=resolver[solver.velocity_slot], theta=resolver[solver.scalar_slot]
        )
        series = advect(
            inputs["v"], inputs["theta"], solver.dt, solver.steps, solver.dealias, solver.stride
        )
        ball = self.ball()
        method = self.section(FunctionalConfig).shift_method()
        epsilons = solver.epsilon_values(self.grid)
        rows, mean_l2 = [], []
        for eps in epsilons:
            result = balance_residual(series, eps, ball, method)
            for time, norms in zip(result.times, result.norms):
                rows.append(dict(epsilon=eps, time=time, **norms))
            mean_l2.append(float(np.mean([n["L2"] for n in result.norms])))
            self.log.info("eps=%g: mean L2 residual %.4e", eps, mean_l2[-1])
        report.add_table("balance.csv", ["epsilon", "time", "L1", "L2", "Linf"], rows)
        report.add(
            epsilons=epsilons,
            mean_l2_residual=mean_l2,
            l2_slope=loglog_slope(epsilons, mean_l2),
            snapshots=len(series),
            input_hashes=resolver.hashes,
            stored_fields=self.write_inputs(report, dict(inputs.slots)),
        )
        report.write()


class ExponentsApp(YaglomSubcommand):
    name = "yaglom exponents"
    description = """Fit increment exponents of v and curl v and predict helicity conservation."""
    classes = list(SECTIONS)

    def run(self):
        exponents = self.section(ExponentConfig)
        functional = self.section(FunctionalConfig)
        report = self.new_report()
        resolver = self.resolver()
        v = resolver[exponents.velocity_slot]
        if exponents.vorticity_slot in functional.slots:
            omega = resolver[exponents.vorticity_slot]
        else:
            omega = vorticity(v)
        lambdas = exponents.lambdas or None
        method = functional.shift_method()
        sphere = self.sphere()
        est_v = scaling_exponent(v, exponents.velocity_order, lambdas, sphere, method)
        est_omega = scaling_exponent(omega, exponents.vorticity_order, lambdas, sphere, method)
        prediction = conservation_predictor(est_v, est_omega, exponents.r1, exponents.r2)
        rows = [
            {"scale": lam, "velocity_norm": nv, "vorticity_norm": nw}
            for lam, nv, nw in zip(est_v.lambdas, est_v.norms, est_omega.norms)
        ]
        report.add_table("exponents.csv", ["scale", "velocity_norm", "vorticity_norm"], rows)
        report.add(
            velocity=est_v.to_dict(),
            vorticity=est_omega.to_dict(),
            prediction=prediction.to_dict(),
            input_hashes=resolver.hashes,
        )
        self.log.info("helicity %s (margin %.4f)", prediction.verdict, prediction.margin)
        report.write()


class YaglomApp(Application):
    version = __version__
    name = "yaglom"
    description = """Diagnostics for dissipation anomalies and 4/3 laws on periodic fields.

    Catalog entries: {}
    """.format(", ".join(sorted(CATALOG)))
    subcommands = Dict(
        {
            "generate": (GenerateApp, GenerateApp.description.splitlines()[0]),
            "lawcheck": (LawCheckApp, LawCheckApp.description.splitlines()[0]),
            "structure": (StructureApp, StructureApp.description.splitlines()[0]),
            "dissipation": (DissipationApp, DissipationApp.description.splitlines()[0]),
            "balance": (BalanceApp, BalanceApp.description.splitlines()[0]),
            "exponents": (ExponentsApp, ExponentsApp.description.splitlines()[0]),
        }
    )
    aliases = {}
    flags = {}

    def start(self):
        if self.subapp is None:
            print("No subcommand specified. Must specify one of: %s" % list(self.subcommands))
            print()
            self.print_description()
            self.print_subcommands()
            self.exit(1)
        else:
            return self.subapp.start()


main = launch_new_instance = YaglomApp.launch_instance

if __name__ == "__main__":
    main()
