#!/usr/bin/env python3
"""
Annulus Extremal Engine - HTTP API Entry Point
"""

import argparse
from app.main import app
from config import FLASK_HOST, FLASK_PORT, FLASK_DEBUG, print_config

def main():
    parser = argparse.ArgumentParser(description="Annulus Extremal Engine API")
    parser.add_argument("--host", default=FLASK_HOST, help="Host to bind to")
    parser.add_argument("--port", type=int, default=FLASK_PORT, help="Port to bind to")
    parser.add_argument("--debug", action="store_true", default=FLASK_DEBUG, help="Enable debug mode")

    args = parser.parse_args()
    if args.debug:
        print_config()

    print("🚀 Starting Annulus Extremal Engine...")
    print(f"📡 API will be available at: http://{args.host}:{args.port}")
    print(f"🩺 Health check: http://{args.host}:{args.port}/health")
    print("=" * 60)

    app.run(
        host=args.host,
        port=args.port,
        debug=args.debug
    )

if __name__ == "__main__":
    main()
