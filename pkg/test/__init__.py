"""FactorStep 测试套件

单元测试覆盖各模块，test_cli 为命令行集成测试。
"""
