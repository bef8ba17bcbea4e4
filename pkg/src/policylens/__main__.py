"""Service launcher: python -m policylens [--config FILE] [--mock] ..."""

import argparse
import logging
import sys

import uvicorn

from .service import ServiceConfig, create_app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="policylens", description=__doc__)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--host", help="bind address override")
    parser.add_argument("--port", type=int, help="bind port override")
    parser.add_argument("--store", help="store file path override")
    parser.add_argument("--mock", action="store_true",
                        help="use the scripted mock provider")
    parser.add_argument("--scenario-dir", help="mock scenario directory")
    parser.add_argument("--study-mode", action="store_true",
                        help="enable activity logging")
    args = parser.parse_args(argv)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )

    if args.config:
        config = ServiceConfig.from_file(args.config)
    else:
        config = ServiceConfig().with_env_overrides()

    from dataclasses import replace

    if args.host:
        config = replace(config, bind_host=args.host)
    if args.port:
        config = replace(config, bind_port=args.port)
    if args.store:
        config = replace(config, store_path=args.store)
    if args.mock:
        config = replace(config, provider_kind="mock")
    if args.scenario_dir:
        config = replace(config, scenario_dir=args.scenario_dir)
    if args.study_mode:
        config = replace(config, study_mode=True)

    app = create_app(config)
    uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_config=None)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
