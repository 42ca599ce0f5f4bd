"""Run the placement session service: python3 -m rackalloc.service"""

import argparse

import uvicorn

from .app import create_app
from .session import SessionConfig


def main() -> None:
    parser = argparse.ArgumentParser(prog="rackalloc-service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--persist-dir", default=None)
    parser.add_argument("--time-limit", type=float, default=240.0)
    parser.add_argument("--max-horizon", type=int, default=8)
    parser.add_argument("--sample-paths", type=int, default=1)
    parser.add_argument("--test-mode", action="store_true",
                        help="verify event-log replay after every mutation")
    args = parser.parse_args()
    config = SessionConfig(
        sample_paths=args.sample_paths,
        time_limit=args.time_limit,
        max_horizon=args.max_horizon,
        test_mode=args.test_mode,
    )
    app = create_app(persist_dir=args.persist_dir, default_config=config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
