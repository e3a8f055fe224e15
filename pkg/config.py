"""
Configuration file for the Annulus Extremal Engine API server.
Numerical and logging settings live in app/config.py.
"""

import os

# Flask Configuration
FLASK_HOST = os.getenv('EXTREMAL_HOST', '0.0.0.0')
FLASK_PORT = int(os.getenv('EXTREMAL_PORT', '5010'))
FLASK_DEBUG = os.getenv('EXTREMAL_DEBUG', 'False').lower() == 'true'

def print_config():
    """Print current configuration"""
    print("Current Configuration:")
    print(f"   Flask Host: {FLASK_HOST}")
    print(f"   Flask Port: {FLASK_PORT}")
    print(f"   Flask Debug: {FLASK_DEBUG}")
    print("=" * 50)

if __name__ == "__main__":
    print_config()
