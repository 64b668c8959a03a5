"""FactorStep - Application Entry Point"""
import os
import signal
import sys

# 确保 src 模块可以被导入
app_dir = os.path.dirname(os.path.abspath(__file__))
if app_dir not in sys.path:
    sys.path.insert(0, app_dir)

try:
    from src.cli import dispatch
    from src.utils.log_manager import logger
except ImportError as e:
    print(f"FactorStep 启动错误: 无法加载模块 ({e})\n工作目录: {os.getcwd()}", file=sys.stderr)
    sys.exit(1)


def signal_handler(sig, frame):
    """处理 Ctrl+C 信号，优雅退出"""
    logger.info("收到退出信号，正在退出...")
    sys.exit(130)


def main() -> int:
    """Application main entry point."""
    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("用户中断，退出")
        sys.exit(130)
